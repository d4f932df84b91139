#ifndef SOFTPEN_SOFTPEN_HPP
#define SOFTPEN_SOFTPEN_HPP

#include "softpen/duality.hpp"
#include "softpen/errors.hpp"
#include "softpen/experiment.hpp"
#include "softpen/libsvm.hpp"
#include "softpen/nested.hpp"
#include "softpen/oracle.hpp"
#include "softpen/penalty.hpp"
#include "softpen/problem.hpp"
#include "softpen/prox.hpp"
#include "softpen/qp_gen.hpp"
#include "softpen/solvers.hpp"
#include "softpen/trace.hpp"

#endif
