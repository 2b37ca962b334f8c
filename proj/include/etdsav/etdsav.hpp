#pragma once

#include "etdsav/grid.hpp"
#include "etdsav/spectral.hpp"
#include "etdsav/phi.hpp"
#include "etdsav/scheme.hpp"
#include "etdsav/adaptive.hpp"
#include "etdsav/stability.hpp"
#include "etdsav/etdrk4.hpp"
#include "etdsav/statistics.hpp"
#include "etdsav/harness.hpp"
#include "etdsav/io.hpp"
