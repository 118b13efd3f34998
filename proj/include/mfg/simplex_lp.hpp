// Small dense two-phase simplex for equality-constrained LPs in standard form
//   min c'x  s.t.  A x = b,  x >= 0.
// Bland's rule throughout, so it terminates; sized for a handful of
// constraints and a few dozen variables.
#ifndef MFG_SIMPLEX_LP_HPP
#define MFG_SIMPLEX_LP_HPP

#include <vector>

namespace mfg {

struct LpResult {
    enum class Status { Optimal, Infeasible } status = Status::Infeasible;
    double value = 0.0;
    std::vector<double> x;
    double feasibility_gap = 0.0;  // phase-1 optimum when infeasible
};

// A is n_rows x n_cols row-major.
LpResult solve_lp(const std::vector<double>& A, const std::vector<double>& b,
                  const std::vector<double>& c, int n_rows, int n_cols);

}  // namespace mfg

#endif
