#pragma once

// KKT certificate for the QP in qp.hpp. Deliberately shares no code with the
// solver: it only evaluates the optimality conditions at a given point.

#include "ddc/qp.hpp"

namespace ddc::qp {

struct KktReport {
  double stationarity = 0.0;     ///< ||Hz + f + A_eq' lambda + A_in' nu||_inf / (1 + max(||Hz||, ||f||))
  double eq_violation = 0.0;     ///< ||A_eq z - b_eq||_inf / (1 + ||b_eq||_inf)
  double in_violation = 0.0;     ///< max(A_in z - b_in, 0) / (1 + ||b_in||_inf)
  double dual_violation = 0.0;   ///< max(-nu, 0)
  double complementarity = 0.0;  ///< max |nu_i (b_in - A_in z)_i|

  double max() const;
};

KktReport check_kkt(const QpProblem& problem, const Vector& z, const Vector& eq_multipliers,
                    const Vector& in_multipliers);

}  // namespace ddc::qp
