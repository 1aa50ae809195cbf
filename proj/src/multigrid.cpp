#include "qcreg/multigrid.hpp"

#include <algorithm>
#include <cassert>

#include "qcreg/errors.hpp"

namespace qcreg {

namespace {

Grid coarser(const Grid& g) { return Grid(g.levels() - 1); }

void check_size(const Grid& g, const ScalarLattice& v, const char* what) {
  if (v.size() != g.node_count()) {
    throw ShapeError(std::string(what) + ": lattice has " + std::to_string(v.size()) + " values, grid has " +
                     std::to_string(g.node_count()) + " nodes");
  }
}

// Coarse indices (and weights) that a fine index interpolates from.
struct Parents {
  int count;
  int idx[2];
  double w[2];
};

Parents parents_of(int fine) {
  if (fine % 2 == 0) return {1, {fine / 2, 0}, {1.0, 0.0}};
  return {2, {(fine - 1) / 2, (fine + 1) / 2}, {0.5, 0.5}};
}

void zero_constrained(ScalarLattice& v, const ConstraintMask& mask) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (mask[i]) v[i] = 0.0;
  }
}

}  // namespace

ScalarLattice restrict_full_weighting(const Grid& fine, const ScalarLattice& v) {
  check_size(fine, v, "restrict");
  if (fine.levels() < 2) throw ShapeError("restrict: grid has no coarser level");
  const Grid coarse = coarser(fine);
  const int nf = fine.nodes_per_axis();
  const int nc = coarse.nodes_per_axis();
  static constexpr double kW[3] = {0.25, 0.5, 0.25};
  ScalarLattice out(coarse.node_count(), 0.0);
  for (int K = 0; K < nc; ++K) {
    for (int J = 0; J < nc; ++J) {
      for (int I = 0; I < nc; ++I) {
        double sum = 0.0;
        for (int dk = -1; dk <= 1; ++dk) {
          const int k = 2 * K + dk;
          if (k < 0 || k >= nf) continue;
          for (int dj = -1; dj <= 1; ++dj) {
            const int j = 2 * J + dj;
            if (j < 0 || j >= nf) continue;
            for (int di = -1; di <= 1; ++di) {
              const int i = 2 * I + di;
              if (i < 0 || i >= nf) continue;
              sum += kW[di + 1] * kW[dj + 1] * kW[dk + 1] * v[fine.index(i, j, k)];
            }
          }
        }
        out[coarse.index(I, J, K)] = sum;
      }
    }
  }
  return out;
}

ScalarLattice prolong_trilinear(const Grid& coarse, const ScalarLattice& v) {
  check_size(coarse, v, "prolong");
  const Grid fine(coarse.levels() + 1);
  const int nf = fine.nodes_per_axis();
  ScalarLattice out(fine.node_count(), 0.0);
  for (int k = 0; k < nf; ++k) {
    const Parents pk = parents_of(k);
    for (int j = 0; j < nf; ++j) {
      const Parents pj = parents_of(j);
      for (int i = 0; i < nf; ++i) {
        const Parents pi = parents_of(i);
        double sum = 0.0;
        for (int c = 0; c < pk.count; ++c) {
          for (int b = 0; b < pj.count; ++b) {
            for (int a = 0; a < pi.count; ++a) {
              sum += pi.w[a] * pj.w[b] * pk.w[c] * v[coarse.index(pi.idx[a], pj.idx[b], pk.idx[c])];
            }
          }
        }
        out[fine.index(i, j, k)] = sum;
      }
    }
  }
  return out;
}

ConstraintMask coarsen_constraints(const Grid& fine, const ConstraintMask& fine_mask) {
  if (fine_mask.size() != fine.node_count()) throw ShapeError("constraint mask size does not match the grid");
  const Grid coarse = coarser(fine);
  ConstraintMask out(coarse.node_count(), 0);
  for (std::size_t v = 0; v < fine_mask.size(); ++v) {
    if (!fine_mask[v]) continue;
    const auto c = fine.coords(v);
    const Parents p0 = parents_of(c[0]), p1 = parents_of(c[1]), p2 = parents_of(c[2]);
    for (int a = 0; a < p0.count; ++a) {
      for (int b = 0; b < p1.count; ++b) {
        for (int d = 0; d < p2.count; ++d) out[coarse.index(p0.idx[a], p1.idx[b], p2.idx[d])] = 1;
      }
    }
  }
  return out;
}

MultigridHierarchy::MultigridHierarchy(const Grid& fine, ConstraintMask fine_constrained, double mu, double sigma,
                                       int sweeps)
    : mu_(mu), sigma_(sigma), sweeps_(sweeps) {
  if (!(mu > 0.0)) throw InvalidArgument("multigrid: penalty must be positive");
  if (sigma < 0.0) throw InvalidArgument("multigrid: sigma must be non-negative");
  if (fine_constrained.size() != fine.node_count()) throw ShapeError("constraint mask size does not match the grid");

  Grid g = fine;
  ConstraintMask mask = std::move(fine_constrained);
  while (true) {
    Level lvl{g, mask, {}};
    const int n = g.nodes_per_axis();
    lvl.dual_volume.resize(g.node_count());
    for (std::size_t v = 0; v < g.node_count(); ++v) {
      const auto c = g.coords(v);
      double vol = 1.0;
      for (int a = 0; a < 3; ++a) {
        if (c[a] == 0 || c[a] == n - 1) vol *= 0.5;
      }
      lvl.dual_volume[v] = vol;
    }
    levels_.push_back(std::move(lvl));
    if (g.levels() == 1) break;
    mask = coarsen_constraints(g, mask);
    g = coarser(g);
  }
  factor_coarsest();
}

double MultigridHierarchy::edge_weight(const Level& lvl, const std::array<int, 3>& a, int axis) const {
  const int n = lvl.grid.nodes_per_axis();
  double w = 1.0;
  for (int e = 0; e < 3; ++e) {
    if (e != axis && (a[e] == 0 || a[e] == n - 1)) w *= 0.5;
  }
  return w;
}

double MultigridHierarchy::scale(std::size_t level) const {
  const double h = levels_[level].grid.spacing();
  return 6.0 * mu_ / (h * h);
}

// y = (1/h^2) sum_j w_ij (x_i - x_j) over every node.
void MultigridHierarchy::apply_graph_laplacian(const Level& lvl, const ScalarLattice& x, ScalarLattice& y) const {
  const Grid& g = lvl.grid;
  const int n = g.nodes_per_axis();
  const std::size_t sj = static_cast<std::size_t>(n), sk = sj * sj;
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  y.assign(g.node_count(), 0.0);
  auto generic = [&](int i, int j, int k) {
    const std::array<int, 3> c{i, j, k};
    const std::size_t v = g.index(i, j, k);
    double acc = 0.0;
    for (int axis = 0; axis < 3; ++axis) {
      if (c[axis] + 1 < n) {
        auto nb = c;
        nb[axis] += 1;
        acc += edge_weight(lvl, c, axis) * (x[v] - x[g.index(nb[0], nb[1], nb[2])]);
      }
      if (c[axis] > 0) {
        auto nb = c;
        nb[axis] -= 1;
        acc += edge_weight(lvl, nb, axis) * (x[v] - x[g.index(nb[0], nb[1], nb[2])]);
      }
    }
    y[v] = acc * inv_h2;
  };
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      if (j == 0 || k == 0 || j == n - 1 || k == n - 1) {
        for (int i = 0; i < n; ++i) generic(i, j, k);
        continue;
      }
      generic(0, j, k);
      const std::size_t row = g.index(0, j, k);
      for (int i = 1; i < n - 1; ++i) {
        const std::size_t v = row + i;
        y[v] = (6.0 * x[v] - x[v - 1] - x[v + 1] - x[v - sj] - x[v + sj] - x[v - sk] - x[v + sk]) * inv_h2;
      }
      generic(n - 1, j, k);
    }
  }
}

void MultigridHierarchy::apply_level(std::size_t level, const ScalarLattice& x, ScalarLattice& y) const {
  const Level& lvl = levels_[level];
  check_size(lvl.grid, x, "apply_level");
  ScalarLattice xm = x;
  zero_constrained(xm, lvl.constrained);
  apply_graph_laplacian(lvl, xm, y);
  const double s = 6.0 * mu_;
  for (std::size_t v = 0; v < y.size(); ++v) y[v] = lvl.constrained[v] ? 0.0 : s * y[v];
}

void MultigridHierarchy::smooth(std::size_t level, ScalarLattice& f, const ScalarLattice& rhs, int sweeps,
                                SweepOrder order) const {
  const Level& lvl = levels_[level];
  const Grid& g = lvl.grid;
  check_size(g, f, "smooth");
  check_size(g, rhs, "smooth");
  zero_constrained(f, lvl.constrained);
  const int n = g.nodes_per_axis();
  const std::size_t sj = static_cast<std::size_t>(n), sk = sj * sj;
  const double inv_s = 1.0 / scale(level);
  const int first = order == SweepOrder::RedFirst ? 0 : 1;
  const auto* mask = lvl.constrained.data();
  double* fv = f.data();
  const double* rv = rhs.data();

  auto generic = [&](int i, int j, int k) {
    const std::size_t v = g.index(i, j, k);
    if (mask[v]) return;
    const std::array<int, 3> c{i, j, k};
    double wsum = 0.0, acc = 0.0;
    for (int axis = 0; axis < 3; ++axis) {
      if (c[axis] + 1 < n) {
        auto nb = c;
        nb[axis] += 1;
        const double w = edge_weight(lvl, c, axis);
        wsum += w;
        acc += w * fv[g.index(nb[0], nb[1], nb[2])];
      }
      if (c[axis] > 0) {
        auto nb = c;
        nb[axis] -= 1;
        const double w = edge_weight(lvl, nb, axis);
        wsum += w;
        acc += w * fv[g.index(nb[0], nb[1], nb[2])];
      }
    }
    fv[v] = (rv[v] * inv_s + acc) / wsum;
  };

  for (int s = 0; s < sweeps; ++s) {
    for (int half = 0; half < 2; ++half) {
      const int color = (first + half) % 2;
      for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
          const int i0 = (color + j + k) % 2;
          if (j == 0 || k == 0 || j == n - 1 || k == n - 1) {
            for (int i = i0; i < n; i += 2) generic(i, j, k);
            continue;
          }
          if (i0 == 0) generic(0, j, k);
          const std::size_t row = g.index(0, j, k);
          const int start = i0 == 0 ? 2 : 1;
          for (int i = start; i < n - 1; i += 2) {
            const std::size_t v = row + i;
            if (mask[v]) continue;
            fv[v] = (rv[v] * inv_s + fv[v - 1] + fv[v + 1] + fv[v - sj] + fv[v + sj] + fv[v - sk] + fv[v + sk]) *
                    (1.0 / 6.0);
          }
          if ((n - 1 - i0) % 2 == 0) generic(n - 1, j, k);
        }
      }
    }
  }
}

ScalarLattice MultigridHierarchy::vcycle(std::size_t level, ScalarLattice f, const ScalarLattice& rhs) const {
  if (level + 1 == levels_.size()) return solve_coarsest(rhs);
  const Level& lvl = levels_[level];
  smooth(level, f, rhs, sweeps_, SweepOrder::RedFirst);

  ScalarLattice Af;
  apply_level(level, f, Af);
  ScalarLattice r(rhs.size());
  for (std::size_t v = 0; v < r.size(); ++v) r[v] = lvl.constrained[v] ? 0.0 : rhs[v] - Af[v];

  ScalarLattice rc = restrict_full_weighting(lvl.grid, r);
  zero_constrained(rc, levels_[level + 1].constrained);
  const ScalarLattice ec = vcycle(level + 1, ScalarLattice(rc.size(), 0.0), rc);
  const ScalarLattice e = prolong_trilinear(levels_[level + 1].grid, ec);
  for (std::size_t v = 0; v < f.size(); ++v) {
    if (!lvl.constrained[v]) f[v] += e[v];
  }

  smooth(level, f, rhs, sweeps_, SweepOrder::BlackFirst);
  return f;
}

ScalarLattice MultigridHierarchy::precondition(const ScalarLattice& g) const {
  check_size(levels_.front().grid, g, "precondition");
  if (!coupled()) return vcycle(0, ScalarLattice(g.size(), 0.0), g);
  Block rhs{ScalarLattice(g.size(), 0.0), g};
  for (double& x : rhs.f) x /= sigma_;
  Block zero{ScalarLattice(g.size(), 0.0), ScalarLattice(g.size(), 0.0)};
  return vcycle_block(0, std::move(zero), rhs).f;
}

// ---- coupled (sigma > 0) path ----

void MultigridHierarchy::apply_block(std::size_t level, const Block& x, Block& y) const {
  const Level& lvl = levels_[level];
  ScalarLattice xf = x.f;
  zero_constrained(xf, lvl.constrained);
  ScalarLattice a1f, a1h;
  apply_graph_laplacian(lvl, xf, a1f);
  apply_graph_laplacian(lvl, x.aux, a1h);
  const double c = 6.0 * mu_ / sigma_;
  y.aux.resize(xf.size());
  y.f.resize(xf.size());
  for (std::size_t v = 0; v < xf.size(); ++v) {
    y.aux[v] = -lvl.dual_volume[v] * x.aux[v] + a1f[v];
    y.f[v] = lvl.constrained[v] ? 0.0 : a1h[v] + c * a1f[v];
  }
}

void MultigridHierarchy::smooth_block(std::size_t level, Block& x, const Block& rhs, int sweeps,
                                      SweepOrder order) const {
  const Level& lvl = levels_[level];
  const Grid& g = lvl.grid;
  zero_constrained(x.f, lvl.constrained);
  const int n = g.nodes_per_axis();
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  const double c = 6.0 * mu_ / sigma_;
  const int first = order == SweepOrder::RedFirst ? 0 : 1;
  for (int s = 0; s < sweeps; ++s) {
    for (int half = 0; half < 2; ++half) {
      const int color = (first + half) % 2;
      for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
          for (int i = (color + j + k) % 2; i < n; i += 2) {
            const std::size_t v = g.index(i, j, k);
            const std::array<int, 3> cc{i, j, k};
            double d = 0.0, nbh = 0.0, nbf = 0.0;
            for (int axis = 0; axis < 3; ++axis) {
              if (cc[axis] + 1 < n) {
                auto nb = cc;
                nb[axis] += 1;
                const double w = edge_weight(lvl, cc, axis);
                const std::size_t u = g.index(nb[0], nb[1], nb[2]);
                d += w;
                nbh += w * x.aux[u];
                nbf += w * x.f[u];
              }
              if (cc[axis] > 0) {
                auto nb = cc;
                nb[axis] -= 1;
                const double w = edge_weight(lvl, nb, axis);
                const std::size_t u = g.index(nb[0], nb[1], nb[2]);
                d += w;
                nbh += w * x.aux[u];
                nbf += w * x.f[u];
              }
            }
            d *= inv_h2;
            nbh *= inv_h2;
            nbf *= inv_h2;
            const double V = lvl.dual_volume[v];
            if (lvl.constrained[v]) {
              x.aux[v] = -(rhs.aux[v] + nbf) / V;
              continue;
            }
            // [-V, d; d, c d] (aux, f) = (rhs_aux + nbf, rhs_f + nbh + c nbf)
            const double b0 = rhs.aux[v] + nbf;
            const double b1 = rhs.f[v] + nbh + c * nbf;
            const double det = -V * c * d - d * d;
            x.aux[v] = (c * d * b0 - d * b1) / det;
            x.f[v] = (-d * b0 - V * b1) / det;
          }
        }
      }
    }
  }
}

MultigridHierarchy::Block MultigridHierarchy::vcycle_block(std::size_t level, Block x, const Block& rhs) const {
  if (level + 1 == levels_.size()) return solve_coarsest_block(rhs);
  const Level& lvl = levels_[level];
  smooth_block(level, x, rhs, sweeps_, SweepOrder::RedFirst);

  Block Ax;
  apply_block(level, x, Ax);
  Block r{ScalarLattice(x.f.size()), ScalarLattice(x.f.size())};
  for (std::size_t v = 0; v < r.f.size(); ++v) {
    r.aux[v] = rhs.aux[v] - Ax.aux[v];
    r.f[v] = lvl.constrained[v] ? 0.0 : rhs.f[v] - Ax.f[v];
  }
  Block rc{restrict_full_weighting(lvl.grid, r.aux), restrict_full_weighting(lvl.grid, r.f)};
  zero_constrained(rc.f, levels_[level + 1].constrained);
  Block zero{ScalarLattice(rc.f.size(), 0.0), ScalarLattice(rc.f.size(), 0.0)};
  const Block ec = vcycle_block(level + 1, std::move(zero), rc);
  const Grid& cg = levels_[level + 1].grid;
  const ScalarLattice eh = prolong_trilinear(cg, ec.aux);
  const ScalarLattice ef = prolong_trilinear(cg, ec.f);
  for (std::size_t v = 0; v < x.f.size(); ++v) {
    x.aux[v] += eh[v];
    if (!lvl.constrained[v]) x.f[v] += ef[v];
  }

  smooth_block(level, x, rhs, sweeps_, SweepOrder::BlackFirst);
  return x;
}

// ---- coarsest level ----

void MultigridHierarchy::factor_coarsest() {
  const std::size_t last = levels_.size() - 1;
  const Level& lvl = levels_[last];
  const std::size_t N = lvl.grid.node_count();
  coarse_free_.clear();
  for (std::size_t v = 0; v < N; ++v) {
    if (!lvl.constrained[v]) coarse_free_.push_back(v);
  }
  const auto m = static_cast<Eigen::Index>(coarse_free_.size());

  if (!coupled()) {
    if (m == 0) return;
    Eigen::MatrixXd A(m, m);
    ScalarLattice e(N, 0.0), Ae;
    for (Eigen::Index col = 0; col < m; ++col) {
      e[coarse_free_[col]] = 1.0;
      apply_level(last, e, Ae);
      e[coarse_free_[col]] = 0.0;
      for (Eigen::Index row = 0; row < m; ++row) A(row, col) = Ae[coarse_free_[row]];
    }
    coarse_llt_.compute(A);
    return;
  }

  const auto n = static_cast<Eigen::Index>(N);
  Eigen::MatrixXd A(n + m, n + m);
  Block e{ScalarLattice(N, 0.0), ScalarLattice(N, 0.0)}, Ae;
  auto fill_column = [&](Eigen::Index col) {
    apply_block(last, e, Ae);
    for (Eigen::Index row = 0; row < n; ++row) A(row, col) = Ae.aux[row];
    for (Eigen::Index row = 0; row < m; ++row) A(n + row, col) = Ae.f[coarse_free_[row]];
  };
  for (Eigen::Index col = 0; col < n; ++col) {
    e.aux[col] = 1.0;
    fill_column(col);
    e.aux[col] = 0.0;
  }
  for (Eigen::Index col = 0; col < m; ++col) {
    e.f[coarse_free_[col]] = 1.0;
    fill_column(n + col);
    e.f[coarse_free_[col]] = 0.0;
  }
  coarse_lu_.compute(A);
}

ScalarLattice MultigridHierarchy::solve_coarsest(const ScalarLattice& rhs) const {
  ScalarLattice out(rhs.size(), 0.0);
  const auto m = static_cast<Eigen::Index>(coarse_free_.size());
  if (m == 0) return out;
  Eigen::VectorXd b(m);
  for (Eigen::Index r = 0; r < m; ++r) b[r] = rhs[coarse_free_[r]];
  const Eigen::VectorXd x = coarse_llt_.solve(b);
  for (Eigen::Index r = 0; r < m; ++r) out[coarse_free_[r]] = x[r];
  return out;
}

MultigridHierarchy::Block MultigridHierarchy::solve_coarsest_block(const Block& rhs) const {
  const auto n = static_cast<Eigen::Index>(rhs.aux.size());
  const auto m = static_cast<Eigen::Index>(coarse_free_.size());
  Eigen::VectorXd b(n + m);
  for (Eigen::Index r = 0; r < n; ++r) b[r] = rhs.aux[r];
  for (Eigen::Index r = 0; r < m; ++r) b[n + r] = rhs.f[coarse_free_[r]];
  const Eigen::VectorXd x = coarse_lu_.solve(b);
  Block out{ScalarLattice(rhs.aux.size(), 0.0), ScalarLattice(rhs.aux.size(), 0.0)};
  for (Eigen::Index r = 0; r < n; ++r) out.aux[r] = x[r];
  for (Eigen::Index r = 0; r < m; ++r) out.f[coarse_free_[r]] = x[n + r];
  return out;
}

}  // namespace qcreg
