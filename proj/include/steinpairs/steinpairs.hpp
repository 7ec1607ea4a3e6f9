#pragma once

#include "steinpairs/bounds.hpp"
#include "steinpairs/config.hpp"
#include "steinpairs/distance.hpp"
#include "steinpairs/errors.hpp"
#include "steinpairs/estimators.hpp"
#include "steinpairs/experiments.hpp"
#include "steinpairs/iid_sum.hpp"
#include "steinpairs/linalg.hpp"
#include "steinpairs/montecarlo.hpp"
#include "steinpairs/pair_checks.hpp"
#include "steinpairs/pair_model.hpp"
#include "steinpairs/perm.hpp"
#include "steinpairs/quadrature.hpp"
#include "steinpairs/report.hpp"
#include "steinpairs/runs.hpp"
#include "steinpairs/spin_chain.hpp"
#include "steinpairs/test_functions.hpp"
