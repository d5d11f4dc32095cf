#pragma once

#include "sselab/errors.hpp"
#include "sselab/rng.hpp"
#include "sselab/statistics.hpp"
#include "sselab/brownian.hpp"
#include "sselab/gauss_hermite.hpp"
#include "sselab/quadrature.hpp"
#include "sselab/hamiltonian.hpp"
#include "sselab/system.hpp"
#include "sselab/trajectory.hpp"
#include "sselab/linear_sde.hpp"
#include "sselab/lindblad.hpp"
#include "sselab/ww_analytic.hpp"
#include "sselab/recipe.hpp"
#include "sselab/zeno_rabi.hpp"
#include "sselab/fit.hpp"
#include "sselab/ensemble.hpp"
#include "sselab/config.hpp"
#include "sselab/io.hpp"
#include "sselab/validation.hpp"
