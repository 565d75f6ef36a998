#pragma once

#include <cmath>
#include <limits>
#include <vector>

namespace sepdbn::lp {

enum class Status { Optimal, Infeasible, Unbounded };

struct Solution {
    Status status = Status::Infeasible;
    double objective = 0.0;
    std::vector<double> x;
};

/// Dense two-phase simplex for small problems, after the classic KACTL
/// formulation: maximize c.x subject to A x <= b, x >= 0.
class Simplex {
public:
    Simplex(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
            const std::vector<double>& c)
        : m_(static_cast<int>(b.size())), n_(static_cast<int>(c.size())), N_(n_ + 1), B_(m_),
          D_(m_ + 2, std::vector<double>(n_ + 2)) {
        for (int i = 0; i < m_; ++i)
            for (int j = 0; j < n_; ++j) D_[i][j] = A[i][j];
        for (int i = 0; i < m_; ++i) {
            B_[i] = n_ + i;
            D_[i][n_] = -1;
            D_[i][n_ + 1] = b[i];
        }
        for (int j = 0; j < n_; ++j) {
            N_[j] = j;
            D_[m_][j] = -c[j];
        }
        N_[n_] = -1;
        D_[m_ + 1][n_] = 1;
    }

    Solution solve() {
        Solution sol;
        int r = 0;
        for (int i = 1; i < m_; ++i)
            if (D_[i][n_ + 1] < D_[r][n_ + 1]) r = i;
        if (m_ > 0 && D_[r][n_ + 1] < -kEps) {
            pivot(r, n_);
            if (!iterate(2) || D_[m_ + 1][n_ + 1] < -kEps) {
                sol.status = Status::Infeasible;
                return sol;
            }
            for (int i = 0; i < m_; ++i)
                if (B_[i] == -1) {
                    int s = 0;
                    for (int j = 1; j <= n_; ++j)
                        if (less_col(i, j, s)) s = j;
                    pivot(i, s);
                }
        }
        bool bounded = iterate(1);
        sol.x.assign(n_, 0.0);
        for (int i = 0; i < m_; ++i)
            if (B_[i] < n_) sol.x[B_[i]] = D_[i][n_ + 1];
        if (!bounded) {
            sol.status = Status::Unbounded;
            sol.objective = std::numeric_limits<double>::infinity();
        } else {
            sol.status = Status::Optimal;
            sol.objective = D_[m_][n_ + 1];
        }
        return sol;
    }

private:
    static constexpr double kEps = 1e-10;

    void pivot(int r, int s) {
        auto& a = D_[r];
        double inv = 1.0 / a[s];
        for (int i = 0; i < m_ + 2; ++i)
            if (i != r && std::abs(D_[i][s]) > kEps) {
                double inv2 = D_[i][s] * inv;
                for (int j = 0; j < n_ + 2; ++j) D_[i][j] -= inv2 * a[j];
                D_[i][s] = a[s] * inv2;
            }
        for (int j = 0; j < n_ + 2; ++j)
            if (j != s) D_[r][j] *= inv;
        for (int i = 0; i < m_ + 2; ++i)
            if (i != r) D_[i][s] *= -inv;
        D_[r][s] = inv;
        std::swap(B_[r], N_[s]);
    }

    bool less_col(int row, int j, int s) const {
        double dj = D_[row][j], ds = D_[row][s];
        return std::make_pair(dj, N_[j]) < std::make_pair(ds, N_[s]);
    }

    bool iterate(int phase) {
        int x = m_ + phase - 1;
        for (;;) {
            int s = -1;
            for (int j = 0; j <= n_; ++j) {
                if (N_[j] == -phase) continue;
                if (s == -1 || std::make_pair(D_[x][j], N_[j]) < std::make_pair(D_[x][s], N_[s])) s = j;
            }
            if (D_[x][s] >= -kEps) return true;
            int r = -1;
            for (int i = 0; i < m_; ++i) {
                if (D_[i][s] <= kEps) continue;
                if (r == -1 ||
                    std::make_pair(D_[i][n_ + 1] / D_[i][s], B_[i]) <
                        std::make_pair(D_[r][n_ + 1] / D_[r][s], B_[r]))
                    r = i;
            }
            if (r == -1) return false;
            pivot(r, s);
        }
    }

    int m_, n_;
    std::vector<int> N_, B_;
    std::vector<std::vector<double>> D_;
};

/// Convenience builder: equality rows are expanded into <= / >= pairs.
class ProblemBuilder {
public:
    explicit ProblemBuilder(int n_vars) : n_(n_vars), c_(n_vars, 0.0) {}

    void set_objective(int var, double coeff) { c_[var] = coeff; }

    void add_le(std::vector<double> row, double rhs) {
        A_.push_back(std::move(row));
        b_.push_back(rhs);
    }

    void add_eq(const std::vector<double>& row, double rhs) {
        A_.push_back(row);
        b_.push_back(rhs);
        std::vector<double> neg(row.size());
        for (std::size_t j = 0; j < row.size(); ++j) neg[j] = -row[j];
        A_.push_back(std::move(neg));
        b_.push_back(-rhs);
    }

    Solution maximize() const { return Simplex(A_, b_, c_).solve(); }

    int n_vars() const { return n_; }

private:
    int n_;
    std::vector<double> c_;
    std::vector<std::vector<double>> A_;
    std::vector<double> b_;
};

}  // namespace sepdbn::lp
