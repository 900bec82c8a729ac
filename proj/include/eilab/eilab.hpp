#pragma once

#include "eilab/error.hpp"
#include "eilab/real.hpp"
#include "eilab/linalg.hpp"
#include "eilab/quadrature.hpp"
#include "eilab/kernel.hpp"
#include "eilab/posterior.hpp"
#include "eilab/expected_improvement.hpp"
#include "eilab/theory.hpp"
