#include "sepbic/tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>

#include "sepbic/errors.hpp"

namespace sepbic {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxBisection = 200;
constexpr int kMaxInverseIterations = 8;

struct Block {
  std::size_t begin;
  std::size_t end;  // exclusive
};

std::vector<Block> split_blocks(const TridiagonalOperator& op) {
  std::vector<Block> blocks;
  std::size_t start = 0;
  const std::size_t n = op.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double e = std::abs(op.off_diagonal[i]);
    const double scale = std::sqrt(std::abs(op.diagonal[i])) * std::sqrt(std::abs(op.diagonal[i + 1]));
    if (e == 0.0 || e <= kEps * scale) {
      blocks.push_back({start, i + 1});
      start = i + 1;
    }
  }
  blocks.push_back({start, n});
  return blocks;
}

double pivot_floor(const TridiagonalOperator& op, const Block& b) {
  double emax = 0.0;
  for (std::size_t i = b.begin; i + 1 < b.end; ++i) emax = std::max(emax, op.off_diagonal[i] * op.off_diagonal[i]);
  return std::max(std::numeric_limits<double>::min(), emax * std::numeric_limits<double>::min() / kEps);
}

std::size_t block_count_below(const TridiagonalOperator& op, const Block& b, double x, double pivmin) {
  std::size_t count = 0;
  double q = op.diagonal[b.begin] - x;
  if (std::abs(q) < pivmin) q = -pivmin;
  if (q < 0) ++count;
  for (std::size_t i = b.begin + 1; i < b.end; ++i) {
    const double e = op.off_diagonal[i - 1];
    q = op.diagonal[i] - x - e * e / q;
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0) ++count;
  }
  return count;
}

void gershgorin(const TridiagonalOperator& op, const Block& b, double& lo, double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  for (std::size_t i = b.begin; i < b.end; ++i) {
    double r = 0.0;
    if (i > b.begin) r += std::abs(op.off_diagonal[i - 1]);
    if (i + 1 < b.end) r += std::abs(op.off_diagonal[i]);
    lo = std::min(lo, op.diagonal[i] - r);
    hi = std::max(hi, op.diagonal[i] + r);
  }
  const double pad = 2.0 * kEps * std::max(std::abs(lo), std::abs(hi)) + 2.0 * std::numeric_limits<double>::min();
  lo -= pad;
  hi += pad;
}

// m-th (0-based) eigenvalue of the block, bracketed in [lo, hi].
double bisect_index(const TridiagonalOperator& op, const Block& b, std::size_t m, double lo, double hi,
                    double pivmin) {
  for (int it = 0; it < kMaxBisection; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double tol = 2.0 * kEps * std::max(std::abs(lo), std::abs(hi)) + pivmin;
    if (hi - lo <= tol || mid <= lo || mid >= hi) return mid;
    if (block_count_below(op, b, mid, pivmin) > m)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

// LU factorization with partial pivoting of (T - lambda I) restricted to a block.
struct PivotedLU {
  std::vector<double> d, u1, u2, l;
  std::vector<char> swapped;

  PivotedLU(const TridiagonalOperator& op, const Block& b, double lambda, double floor_value) {
    const std::size_t m = b.end - b.begin;
    d.assign(m, 0.0);
    u1.assign(m, 0.0);
    u2.assign(m, 0.0);
    l.assign(m, 0.0);
    swapped.assign(m, 0);
    std::vector<double> diag(m), sub(m, 0.0), sup(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      diag[i] = op.diagonal[b.begin + i] - lambda;
      if (i + 1 < m) {
        sub[i] = op.off_diagonal[b.begin + i];
        sup[i] = op.off_diagonal[b.begin + i];
      }
    }
    // Row i holds (diag[i], sup[i], extra) after elimination of earlier rows.
    double cur_d = diag[0];
    double cur_u = m > 1 ? sup[0] : 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      const double below_sub = sub[i];
      const double below_d = diag[i + 1];
      const double below_u = i + 2 < m ? sup[i + 1] : 0.0;
      if (std::abs(cur_d) >= std::abs(below_sub)) {
        const double piv = cur_d == 0.0 ? floor_value : cur_d;
        const double f = below_sub / piv;
        d[i] = piv;
        u1[i] = cur_u;
        u2[i] = 0.0;
        l[i] = f;
        cur_d = below_d - f * cur_u;
        cur_u = below_u;
      } else {
        const double f = cur_d / below_sub;
        swapped[i] = 1;
        d[i] = below_sub;
        u1[i] = below_d;
        u2[i] = below_u;
        l[i] = f;
        cur_d = cur_u - f * below_d;
        cur_u = -f * below_u;
      }
    }
    d[m - 1] = cur_d == 0.0 ? floor_value : cur_d;
    for (auto& v : d)
      if (std::abs(v) < floor_value) v = std::copysign(floor_value, v == 0.0 ? 1.0 : v);
  }

  void solve(std::vector<double>& x) const {
    const std::size_t m = d.size();
    for (std::size_t i = 0; i + 1 < m; ++i) {
      if (swapped[i]) std::swap(x[i], x[i + 1]);
      x[i + 1] -= l[i] * x[i];
    }
    x[m - 1] /= d[m - 1];
    if (m >= 2) x[m - 2] = (x[m - 2] - u1[m - 2] * x[m - 1]) / d[m - 2];
    for (std::size_t k = m - 2; k-- > 0;) x[k] = (x[k] - u1[k] * x[k + 1] - u2[k] * x[k + 2]) / d[k];
  }
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void normalize2(std::vector<double>& v) {
  const double s = std::sqrt(dot(v, v));
  if (s > 0) for (auto& x : v) x /= s;
}

double block_residual(const TridiagonalOperator& op, const Block& b, double lambda, const std::vector<double>& v) {
  const std::size_t m = v.size();
  double r2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double y = (op.diagonal[b.begin + i] - lambda) * v[i];
    if (i > 0) y += op.off_diagonal[b.begin + i - 1] * v[i - 1];
    if (i + 1 < m) y += op.off_diagonal[b.begin + i] * v[i + 1];
    r2 += y * y;
  }
  return std::sqrt(r2);
}

struct Candidate {
  double value;
  Block block;
  std::size_t local_index;
};

std::size_t first_significant(const std::vector<double>& v) {
  double peak = 0.0;
  for (double x : v) peak = std::max(peak, std::abs(x));
  for (std::size_t i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) > 1e-3 * peak) return i;
  return 0;
}

}  // namespace

double TridiagonalOperator::norm() const noexcept {
  double best = 0.0;
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i) {
    double r = std::abs(diagonal[i]);
    if (i > 0) r += std::abs(off_diagonal[i - 1]);
    if (i + 1 < n) r += std::abs(off_diagonal[i]);
    best = std::max(best, r);
  }
  return best;
}

void TridiagonalOperator::validate() const {
  if (diagonal.empty()) throw ValidationError("tridiagonal operator is empty");
  if (off_diagonal.size() + 1 != diagonal.size())
    throw ValidationError("off-diagonal length must be dimension - 1");
  if (!(weight > 0.0)) throw ValidationError("inner-product weight must be positive");
  for (double v : diagonal)
    if (!std::isfinite(v)) throw ValidationError("non-finite diagonal entry");
  for (double v : off_diagonal)
    if (!std::isfinite(v)) throw ValidationError("non-finite off-diagonal entry");
}

std::vector<double> TridiagonalOperator::apply(const std::vector<double>& x) const {
  const std::size_t n = size();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = diagonal[i] * x[i];
    if (i > 0) s += off_diagonal[i - 1] * x[i - 1];
    if (i + 1 < n) s += off_diagonal[i] * x[i + 1];
    y[i] = s;
  }
  return y;
}

std::size_t count_below(const TridiagonalOperator& op, double x) {
  op.validate();
  std::size_t total = 0;
  for (const auto& b : split_blocks(op)) total += block_count_below(op, b, x, pivot_floor(op, b));
  return total;
}

std::vector<EigenPair> eig_tridiagonal(const TridiagonalOperator& op, EigenSelection selection, bool want_vectors) {
  op.validate();
  const std::size_t n = op.size();
  if (selection.kind == EigenSelection::Kind::lowest && selection.count > n)
    throw ValidationError("requested " + std::to_string(selection.count) + " eigenpairs of a dimension-" +
                          std::to_string(n) + " operator");
  const auto blocks = split_blocks(op);
  const double tnorm = std::max(op.norm(), std::numeric_limits<double>::min());

  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  if (selection.kind == EigenSelection::Kind::interval) {
    lo = selection.lo;
    hi = selection.hi;
  } else if (selection.kind == EigenSelection::Kind::lowest) {
    if (selection.count == 0) return {};
    // Upper end: the count-th smallest eigenvalue over all blocks.
    double glo = std::numeric_limits<double>::infinity(), ghi = -glo;
    for (const auto& b : blocks) {
      double a, c;
      gershgorin(op, b, a, c);
      glo = std::min(glo, a);
      ghi = std::max(ghi, c);
    }
    double a = glo, c = ghi;
    for (int it = 0; it < kMaxBisection; ++it) {
      const double mid = 0.5 * (a + c);
      if (c - a <= 2.0 * kEps * std::max(std::abs(a), std::abs(c)) || mid <= a || mid >= c) break;
      std::size_t cnt = 0;
      for (const auto& b : blocks) cnt += block_count_below(op, b, mid, pivot_floor(op, b));
      if (cnt >= selection.count)
        c = mid;
      else
        a = mid;
    }
    hi = c + 4.0 * kEps * tnorm;
  }

  std::vector<Candidate> cands;
  for (const auto& b : blocks) {
    const double pivmin = pivot_floor(op, b);
    double blo, bhi;
    gershgorin(op, b, blo, bhi);
    const std::size_t m = b.end - b.begin;
    std::size_t first = 0, last = m;  // index range [first, last)
    if (std::isfinite(lo)) first = std::min(m, block_count_below(op, b, lo, pivmin));
    if (std::isfinite(hi)) last = std::min(m, block_count_below(op, b, hi, pivmin));
    double prev = blo;
    for (std::size_t k = first; k < last; ++k) {
      const double v = m == 1 ? op.diagonal[b.begin] : bisect_index(op, b, k, prev, bhi, pivmin);
      // Open interval semantics: discard values sitting on the closed ends.
      if (selection.kind == EigenSelection::Kind::interval && (v <= lo || v >= hi)) continue;
      cands.push_back({v, b, k});
      prev = std::max(blo, v - 4.0 * kEps * tnorm);
    }
  }

  std::vector<EigenPair> out;
  out.reserve(cands.size());
  std::vector<std::size_t> first_index;
  first_index.reserve(cands.size());

  // Vectors of earlier eigenvalues in the same block, for reorthogonalization.
  const double cluster_gap = 1e-4 * tnorm;
  std::vector<std::vector<double>> block_vectors;
  std::vector<double> block_values;
  const Block* current_block = nullptr;

  std::mt19937_64 rng(0x5eb1c0ffeeULL);
  for (std::size_t c = 0; c < cands.size(); ++c) {
    const auto& cand = cands[c];
    EigenPair pair;
    pair.value = cand.value;
    if (want_vectors) {
      const Block& b = cand.block;
      const std::size_t m = b.end - b.begin;
      if (current_block == nullptr || current_block->begin != b.begin) {
        block_vectors.clear();
        block_values.clear();
        current_block = &cand.block;
      }
      std::vector<double> v(m);
      if (m == 1) {
        v[0] = 1.0;
      } else {
        const double floor_value = kEps * tnorm;
        PivotedLU lu(op, b, cand.value, floor_value);
        for (auto& x : v) x = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
        bool ok = false;
        for (int it = 0; it < kMaxInverseIterations; ++it) {
          lu.solve(v);
          for (std::size_t q = 0; q < block_vectors.size(); ++q) {
            if (std::abs(block_values[q] - cand.value) > cluster_gap) continue;
            const double proj = dot(block_vectors[q], v);
            for (std::size_t i = 0; i < m; ++i) v[i] -= proj * block_vectors[q][i];
          }
          normalize2(v);
          if (it >= 1 && block_residual(op, b, cand.value, v) <= 1e-12 * tnorm) {
            ok = true;
            break;
          }
        }
        if (!ok && block_residual(op, b, cand.value, v) > 1e-10 * tnorm)
          throw NonConvergenceError("inverse iteration did not converge", c);
      }
      normalize2(v);
      block_vectors.push_back(v);
      block_values.push_back(cand.value);

      pair.vector.assign(n, 0.0);
      for (std::size_t i = 0; i < m; ++i) pair.vector[b.begin + i] = v[i];
      const double scale = 1.0 / std::sqrt(op.weight);
      const std::size_t fs = first_significant(pair.vector);
      const double sign = pair.vector[fs] < 0 ? -1.0 : 1.0;
      for (auto& x : pair.vector) x *= sign * scale;
      first_index.push_back(fs);
    } else {
      first_index.push_back(cand.block.begin);
    }
    out.push_back(std::move(pair));
  }

  // Ascending order; ties between split blocks ordered by first significant component.
  std::vector<std::size_t> order(out.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return out[a].value < out[b].value; });
  const double tie = 8.0 * kEps * tnorm;
  for (std::size_t s = 0; s < order.size();) {
    std::size_t e = s + 1;
    while (e < order.size() && out[order[e]].value - out[order[e - 1]].value <= tie) ++e;
    if (e - s > 1)
      std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(s), order.begin() + static_cast<std::ptrdiff_t>(e),
                       [&](std::size_t a, std::size_t b) { return first_index[a] < first_index[b]; });
    s = e;
  }
  std::vector<EigenPair> sorted;
  sorted.reserve(out.size());
  for (auto i : order) sorted.push_back(std::move(out[i]));
  if (selection.kind == EigenSelection::Kind::lowest && sorted.size() > selection.count) sorted.resize(selection.count);
  return sorted;
}

std::vector<double> eigenvalues(const TridiagonalOperator& op, EigenSelection selection) {
  auto pairs = eig_tridiagonal(op, selection, false);
  std::vector<double> v;
  v.reserve(pairs.size());
  for (auto& p : pairs) v.push_back(p.value);
  return v;
}

}  // namespace sepbic
