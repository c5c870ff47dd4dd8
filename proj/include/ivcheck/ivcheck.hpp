#pragma once

#include "ivcheck/bench.hpp"
#include "ivcheck/dataset.hpp"
#include "ivcheck/errors.hpp"
#include "ivcheck/estimators.hpp"
#include "ivcheck/forest.hpp"
#include "ivcheck/hsic.hpp"
#include "ivcheck/random.hpp"
#include "ivcheck/regression.hpp"
#include "ivcheck/simulate.hpp"
#include "ivcheck/validity.hpp"
