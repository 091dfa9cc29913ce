// Umbrella header.
#pragma once

#include "error.hpp"
#include "sparse.hpp"
#include "ordering.hpp"
#include "cholesky.hpp"
#include "gram.hpp"
#include "network.hpp"
#include "inp.hpp"
#include "headloss.hpp"
#include "null_basis.hpp"
#include "solvers.hpp"
#include "scenario.hpp"
#include "fixtures.hpp"
#include "bench.hpp"
