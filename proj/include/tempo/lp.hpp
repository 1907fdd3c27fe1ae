#pragma once

// Dense two-phase tableau simplex for small linear programs:
//
//   maximize  c^T x   subject to  A x <= b,  x >= 0.
//
// Bland's rule on the entering column and lowest basic index on ratio ties
// keep degenerate problems from cycling. Intended for tens of variables and constraints.

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace tempo::lp {

enum class Status { kOptimal, kInfeasible, kUnbounded };

struct Solution {
  Status status = Status::kInfeasible;
  double value = 0.0;
  std::vector<double> x;
};

class Simplex {
 public:
  using Row = std::vector<double>;

  Simplex(const std::vector<Row>& A, const Row& b, const Row& c, double eps = 1e-10)
      : m_(static_cast<int>(b.size())),
        n_(static_cast<int>(c.size())),
        eps_(eps),
        nonbasic_(n_ + 1),
        basic_(m_),
        D_(m_ + 2, Row(n_ + 2, 0.0)) {
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < n_; ++j) D_[i][j] = A[i][j];
    for (int i = 0; i < m_; ++i) {
      basic_[i] = n_ + i;
      D_[i][n_] = -1.0;
      D_[i][n_ + 1] = b[i];
    }
    for (int j = 0; j < n_; ++j) {
      nonbasic_[j] = j;
      D_[m_][j] = -c[j];
    }
    nonbasic_[n_] = -1;
    D_[m_ + 1][n_] = 1.0;
  }

  Solution solve() {
    Solution sol;
    int r = 0;
    for (int i = 1; i < m_; ++i)
      if (D_[i][n_ + 1] < D_[r][n_ + 1]) r = i;
    if (m_ > 0 && D_[r][n_ + 1] < -eps_) {
      // Phase 1: the auxiliary column n_ absorbs the infeasibility.
      pivot(r, n_);
      if (!run(2) || D_[m_ + 1][n_ + 1] < -eps_) {
        sol.status = Status::kInfeasible;
        return sol;
      }
      for (int i = 0; i < m_; ++i) {
        if (basic_[i] != -1) continue;
        int s = 0;
        for (int j = 1; j <= n_; ++j)
          if (s == -1 || std::make_pair(D_[i][j], nonbasic_[j]) < std::make_pair(D_[i][s], nonbasic_[s])) s = j;
        pivot(i, s);
      }
    }
    bool bounded = run(1);
    sol.x.assign(n_, 0.0);
    for (int i = 0; i < m_; ++i)
      if (basic_[i] >= 0 && basic_[i] < n_) sol.x[basic_[i]] = D_[i][n_ + 1];
    if (!bounded) {
      sol.status = Status::kUnbounded;
      sol.value = std::numeric_limits<double>::infinity();
      return sol;
    }
    sol.status = Status::kOptimal;
    sol.value = D_[m_][n_ + 1];
    return sol;
  }

 private:
  void pivot(int r, int s) {
    const double inv = 1.0 / D_[r][s];
    for (int i = 0; i < m_ + 2; ++i) {
      if (i == r || std::abs(D_[i][s]) <= eps_) continue;
      const double f = D_[i][s] * inv;
      for (int j = 0; j < n_ + 2; ++j) D_[i][j] -= D_[r][j] * f;
      D_[i][s] = D_[r][s] * f;
    }
    for (int j = 0; j < n_ + 2; ++j)
      if (j != s) D_[r][j] *= inv;
    for (int i = 0; i < m_ + 2; ++i)
      if (i != r) D_[i][s] *= -inv;
    D_[r][s] = inv;
    std::swap(basic_[r], nonbasic_[s]);
  }

  bool run(int phase) {
    const int x = m_ + phase - 1;
    for (;;) {
      // Bland's rule: lowest-index improving column.
      int s = -1;
      for (int j = 0; j <= n_; ++j) {
        if (nonbasic_[j] == -phase || D_[x][j] >= -eps_) continue;
        if (s == -1 || nonbasic_[j] < nonbasic_[s]) s = j;
      }
      if (s == -1) return true;
      int r = -1;
      for (int i = 0; i < m_; ++i) {
        if (D_[i][s] <= eps_) continue;
        if (r == -1 || std::make_pair(D_[i][n_ + 1] / D_[i][s], basic_[i]) <
                           std::make_pair(D_[r][n_ + 1] / D_[r][s], basic_[r]))
          r = i;
      }
      if (r == -1) return false;
      pivot(r, s);
    }
  }

  int m_, n_;
  double eps_;
  std::vector<int> nonbasic_, basic_;
  std::vector<Row> D_;
};

inline Solution maximize(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                         const std::vector<double>& c) {
  return Simplex(A, b, c).solve();
}

}  // namespace tempo::lp
