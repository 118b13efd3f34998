#include "mfg/simplex_lp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mfg {

namespace {

// Tableau simplex over [A | I_artificial], Bland's rule.
class Tableau {
public:
    Tableau(const std::vector<double>& A, const std::vector<double>& b, int rows, int cols)
        : rows_(rows), cols_(cols + rows), tab_(rows * (cols + rows + 1)), basic_(rows) {
        for (int i = 0; i < rows_; ++i) {
            double sign = b[i] >= 0.0 ? 1.0 : -1.0;
            for (int j = 0; j < cols; ++j) at(i, j) = sign * A[i * cols + j];
            at(i, cols + i) = 1.0;
            rhs(i) = sign * b[i];
            basic_[i] = cols + i;
        }
        n_struct_ = cols;
    }

    double& at(int i, int j) { return tab_[i * (cols_ + 1) + j]; }
    double& rhs(int i) { return tab_[i * (cols_ + 1) + cols_]; }

    // minimize c over current feasible region; artificial columns can be
    // fenced off by passing allowed_cols < cols_.
    double minimize(const std::vector<double>& c, int allowed_cols) {
        const int max_iter = 20000;
        for (int iter = 0; iter < max_iter; ++iter) {
            // reduced costs computed fresh from the maintained tableau; sizes
            // here are tiny
            int enter = -1;
            for (int j = 0; j < allowed_cols; ++j) {
                double red = c[j];
                for (int i = 0; i < rows_; ++i) red -= c[basic_[i]] * at(i, j);
                if (red < -1e-11) {
                    enter = j;  // Bland: first improving column
                    break;
                }
            }
            if (enter < 0) break;

            int leave = -1;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (int i = 0; i < rows_; ++i) {
                if (at(i, enter) > 1e-12) {
                    double ratio = rhs(i) / at(i, enter);
                    if (ratio < best_ratio - 1e-15 ||
                        (ratio < best_ratio + 1e-15 &&
                         (leave < 0 || basic_[i] < basic_[leave]))) {
                        best_ratio = ratio;
                        leave = i;
                    }
                }
            }
            if (leave < 0) throw std::runtime_error("lp: unbounded");
            pivot(leave, enter);
        }
        double value = 0.0;
        for (int i = 0; i < rows_; ++i) value += c[basic_[i]] * rhs(i);
        return value;
    }

    void pivot(int leave, int enter) {
        double p = at(leave, enter);
        for (int j = 0; j <= cols_; ++j) tab_[leave * (cols_ + 1) + j] /= p;
        for (int i = 0; i < rows_; ++i) {
            if (i == leave) continue;
            double f = at(i, enter);
            if (f == 0.0) continue;
            for (int j = 0; j <= cols_; ++j)
                tab_[i * (cols_ + 1) + j] -= f * tab_[leave * (cols_ + 1) + j];
        }
        basic_[leave] = enter;
    }

    int rows_, cols_, n_struct_;
    std::vector<double> tab_;
    std::vector<int> basic_;
};

}  // namespace

LpResult solve_lp(const std::vector<double>& A, const std::vector<double>& b,
                  const std::vector<double>& c, int n_rows, int n_cols) {
    Tableau t(A, b, n_rows, n_cols);

    // phase 1: minimize sum of artificials
    std::vector<double> c1(n_cols + n_rows, 0.0);
    for (int i = 0; i < n_rows; ++i) c1[n_cols + i] = 1.0;
    double scale = 1.0;
    for (double v : b) scale = std::max(scale, std::abs(v));
    double gap = t.minimize(c1, n_cols + n_rows);

    LpResult res;
    if (gap > 1e-9 * scale) {
        res.status = LpResult::Status::Infeasible;
        res.feasibility_gap = gap;
        return res;
    }

    // drive lingering artificials out of the basis where possible
    for (int i = 0; i < n_rows; ++i) {
        if (t.basic_[i] < n_cols) continue;
        int enter = -1;
        for (int j = 0; j < n_cols; ++j)
            if (std::abs(t.at(i, j)) > 1e-9) {
                enter = j;
                break;
            }
        if (enter >= 0) t.pivot(i, enter);
        // else: redundant row, artificial stays at zero level
    }

    // phase 2; artificials cannot re-enter (allowed_cols excludes them) and
    // any still basic sit at zero level with zero cost
    std::vector<double> c2(n_cols + n_rows, 0.0);
    for (int j = 0; j < n_cols; ++j) c2[j] = c[j];
    double value = t.minimize(c2, n_cols);

    res.status = LpResult::Status::Optimal;
    res.value = value;
    res.x.assign(n_cols, 0.0);
    for (int i = 0; i < n_rows; ++i)
        if (t.basic_[i] < n_cols) res.x[t.basic_[i]] = t.rhs(i);
    return res;
}

}  // namespace mfg
