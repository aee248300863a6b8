#pragma once

#include "mfpd/ansatz.hpp"
#include "mfpd/bubble.hpp"
#include "mfpd/config.hpp"
#include "mfpd/construct.hpp"
#include "mfpd/diagnostics.hpp"
#include "mfpd/discrete.hpp"
#include "mfpd/expr.hpp"
#include "mfpd/geometry.hpp"
#include "mfpd/greens.hpp"
#include "mfpd/mesh.hpp"
#include "mfpd/runner.hpp"
#include "mfpd/solver.hpp"
