#include "rpi_forge/geom.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

#include "rpi_forge/error.hpp"
#include "rpi_forge/lp.hpp"

namespace rpi_forge::geom {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Set types

HPolytope::HPolytope(MatrixXd normals_in, VectorXd offsets_in)
    : normals(std::move(normals_in)), offsets(std::move(offsets_in)) {
  require(normals.rows() == offsets.size(), ErrorCode::kDimensionMismatch,
          "HPolytope: normals and offsets have different row counts");
}

bool HPolytope::contains(const VectorXd& z, double tol) const {
  return max_violation(z) <= tol;
}

double HPolytope::max_violation(const VectorXd& z) const {
  require(z.size() == dim(), ErrorCode::kDimensionMismatch, "HPolytope: point dimension");
  double worst = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < num_rows(); ++i) {
    const double norm = normals.row(i).norm();
    if (norm == 0.0) {
      worst = std::max(worst, -offsets(i));
      continue;
    }
    worst = std::max(worst, (normals.row(i).dot(z) - offsets(i)) / norm);
  }
  return worst;
}

HPolytope HPolytope::scaled(double factor) const {
  return HPolytope(normals, offsets * factor);
}

HPolytope HPolytope::normalized() const {
  HPolytope out = *this;
  for (Index i = 0; i < num_rows(); ++i) {
    const double norm = normals.row(i).norm();
    if (norm > 0.0) {
      out.normals.row(i) /= norm;
      out.offsets(i) /= norm;
    }
  }
  return out;
}

HPolytope HPolytope::box(const VectorXd& lower, const VectorXd& upper) {
  require(lower.size() == upper.size(), ErrorCode::kDimensionMismatch, "box bounds");
  const Index n = lower.size();
  MatrixXd G(2 * n, n);
  G << MatrixXd::Identity(n, n), -MatrixXd::Identity(n, n);
  VectorXd h(2 * n);
  h << upper, -lower;
  return HPolytope(G, h);
}

HPolytope HPolytope::cube(Index n, double bound) {
  return box(VectorXd::Constant(n, -bound), VectorXd::Constant(n, bound));
}

double VPolytope::support(const VectorXd& direction) const {
  require(num_vertices() > 0, ErrorCode::kEmptySet, "support of empty V-polytope");
  return (direction.transpose() * vertices).maxCoeff();
}

VPolytope VPolytope::point(const VectorXd& p) { return VPolytope(MatrixXd(p)); }

Ellipsoid::Ellipsoid(MatrixXd Q) : shape(std::move(Q)) {
  require(shape.rows() == shape.cols(), ErrorCode::kDimensionMismatch,
          "Ellipsoid: shape must be square");
  require(is_spd(shape), ErrorCode::kInvalidArgument,
          "Ellipsoid: shape matrix must be symmetric positive definite");
}

bool Ellipsoid::contains(const VectorXd& z, double tol) const {
  return gauge(*this, z) <= 1.0 + tol;
}

GaugePolytope::GaugePolytope(const HPolytope& base)
    : facets_(base.normalized()), vertices_() {
  validate();
  vertices_ = vertex_enum(facets_);
}

GaugePolytope::GaugePolytope(const VPolytope& base) {
  vertices_ = convex_hull(base);
  facets_ = facet_enum(vertices_);
  validate();
}

GaugePolytope::GaugePolytope(const HPolytope& facets, const VPolytope& vertices)
    : facets_(facets.normalized()), vertices_(vertices) {
  validate();
}

void GaugePolytope::validate() const {
  for (Index i = 0; i < facets_.num_rows(); ++i) {
    require(facets_.offsets(i) > 0.0, ErrorCode::kInvalidGauge,
            "gauge body must contain the origin in its interior");
  }
}

// ---------------------------------------------------------------------------
// Gauges and induced norms

double gauge(const HPolytope& set, const VectorXd& z) {
  require(z.size() == set.dim(), ErrorCode::kDimensionMismatch, "gauge: dimension");
  double value = 0.0;
  for (Index i = 0; i < set.num_rows(); ++i) {
    require(set.offsets(i) > 0.0, ErrorCode::kInvalidGauge,
            "gauge: every offset must be positive (origin interior)");
    value = std::max(value, set.normals.row(i).dot(z) / set.offsets(i));
  }
  return value;
}

double gauge(const GaugePolytope& set, const VectorXd& z) { return gauge(set.facets(), z); }

double gauge(const Ellipsoid& set, const VectorXd& z) {
  require(z.size() == set.dim(), ErrorCode::kDimensionMismatch, "gauge: dimension");
  const double q = z.dot(set.shape.ldlt().solve(z));
  return std::sqrt(std::max(q, 0.0));
}

double induced_gauge_norm(const MatrixXd& A, const GaugePolytope& set) {
  require(A.rows() == set.dim() && A.cols() == set.dim(), ErrorCode::kDimensionMismatch,
          "induced_gauge_norm: matrix must be square in the set dimension");
  const HPolytope& f = set.facets();
  const MatrixXd images = A * set.vertices().vertices;
  const MatrixXd ratios = (f.normals * images).array().colwise() / f.offsets.array();
  return std::max(0.0, ratios.maxCoeff());
}

double induced_ellipsoidal_norm(const MatrixXd& A, const MatrixXd& P) {
  const MatrixXd whitened = spd_inverse_sqrt(P) * A * spd_sqrt(P);
  Eigen::JacobiSVD<MatrixXd> svd(whitened);
  return svd.singularValues()(0);
}

MatrixXd spd_sqrt(const MatrixXd& P) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(P);
  require(eig.eigenvalues().minCoeff() > 0.0, ErrorCode::kInvalidArgument,
          "matrix is not positive definite");
  return eig.operatorSqrt();
}

MatrixXd spd_inverse_sqrt(const MatrixXd& P) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(P);
  require(eig.eigenvalues().minCoeff() > 0.0, ErrorCode::kInvalidArgument,
          "matrix is not positive definite");
  return eig.operatorInverseSqrt();
}

bool is_spd(const MatrixXd& P, double tol) {
  if (P.rows() != P.cols() || P.rows() == 0) return false;
  if (!(P - P.transpose()).isZero(1e-9 * (1.0 + P.cwiseAbs().maxCoeff()))) return false;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(P, Eigen::EigenvaluesOnly);
  const VectorXd ev = eig.eigenvalues();
  return ev(0) > tol * std::max(1.0, ev(ev.size() - 1));
}

// ---------------------------------------------------------------------------
// Redundancy removal

namespace {

lp::Options lp_options(double tol) {
  lp::Options o;
  o.feasibility_tol = std::min(1e-9, tol);
  o.optimality_tol = 1e-10;
  return o;
}

// Unit-norm rows, zero rows checked and dropped, near-duplicates collapsed to
// their tightest copy. Returns original row indices alongside.
struct CleanRows {
  MatrixXd G;
  VectorXd h;
  std::vector<Index> origin;
};

CleanRows clean_rows(const HPolytope& poly, double tol) {
  const Index q = poly.num_rows();
  const Index n = poly.dim();
  std::vector<Index> order;
  MatrixXd G(q, n);
  VectorXd h(q);
  for (Index i = 0; i < q; ++i) {
    const double norm = poly.normals.row(i).norm();
    if (norm < 1e-14) {
      require(poly.offsets(i) >= -tol, ErrorCode::kEmptySet,
              "polytope is empty (0 <= negative offset)");
      continue;
    }
    G.row(i) = poly.normals.row(i) / norm;
    h(i) = poly.offsets(i) / norm;
    order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    for (Index j = 0; j < n; ++j) {
      if (G(a, j) != G(b, j)) return G(a, j) < G(b, j);
    }
    return h(a) < h(b);
  });
  CleanRows out;
  std::vector<Index> kept;
  for (Index idx : order) {
    if (!kept.empty()) {
      const Index last = kept.back();
      if ((G.row(idx) - G.row(last)).lpNorm<Eigen::Infinity>() < 1e-12) continue;
    }
    kept.push_back(idx);
  }
  std::sort(kept.begin(), kept.end());
  out.G.resize(static_cast<Index>(kept.size()), n);
  out.h.resize(static_cast<Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) {
    out.G.row(static_cast<Index>(k)) = G.row(kept[k]);
    out.h(static_cast<Index>(k)) = h(kept[k]);
    out.origin.push_back(kept[k]);
  }
  return out;
}

MatrixXd gather_rows(const MatrixXd& G, const std::vector<Index>& rows) {
  MatrixXd out(static_cast<Index>(rows.size()), G.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = G.row(rows[k]);
  return out;
}

VectorXd gather(const VectorXd& h, const std::vector<Index>& rows) {
  VectorXd out(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) out(static_cast<Index>(k)) = h(rows[k]);
  return out;
}

// max g_k'x over the rows in `active` plus an outer box.
lp::Result probe_row(const MatrixXd& G, const VectorXd& h, const std::vector<Index>& active,
                     const MatrixXd& box_G, const VectorXd& box_h, Index k, double tol) {
  const Index r = static_cast<Index>(active.size());
  MatrixXd A(r + box_G.rows(), G.cols());
  VectorXd b(r + box_G.rows());
  A.topRows(r) = gather_rows(G, active);
  b.head(r) = gather(h, active);
  A.bottomRows(box_G.rows()) = box_G;
  b.tail(box_G.rows()) = box_h;
  return lp::maximize(A, b, G.row(k).transpose(), lp_options(tol));
}

}  // namespace

HPolytope remove_redundant(const HPolytope& poly, double tol) {
  const CleanRows rows = clean_rows(poly, tol);
  const MatrixXd& G = rows.G;
  const VectorXd& h = rows.h;
  const Index q = G.rows();
  const Index n = poly.dim();
  if (q == 0) return HPolytope(MatrixXd(0, n), VectorXd(0));

  const auto ball = lp::chebyshev_ball(G, h, 1e6, lp_options(tol));
  require(ball.has_value(), ErrorCode::kEmptySet, "remove_redundant: polytope is empty");

  std::vector<Index> keep;
  if (ball->radius <= tol) {
    // Flat set: no interior point for ray shooting, test each row directly.
    std::vector<bool> alive(q, true);
    for (Index k = 0; k < q; ++k) {
      std::vector<Index> others;
      for (Index j = 0; j < q; ++j)
        if (j != k && alive[j]) others.push_back(j);
      const lp::Result r = probe_row(G, h, others, MatrixXd(0, n), VectorXd(0), k, tol);
      if (r.status == lp::Status::kOptimal && r.objective <= h(k) + tol) alive[k] = false;
    }
    for (Index k = 0; k < q; ++k)
      if (alive[k]) keep.push_back(k);
  } else {
    const VectorXd& center = ball->center;
    const double reach = 1e7 * (1.0 + center.lpNorm<Eigen::Infinity>() +
                                h.cwiseAbs().maxCoeff());
    const HPolytope outer = HPolytope::box(center.array() - reach, center.array() + reach);
    std::vector<bool> in_set(q, false);
    std::vector<Index> facets;
    for (Index k = 0; k < q; ++k) {
      while (!in_set[k]) {
        const lp::Result r = probe_row(G, h, facets, outer.normals, outer.offsets, k, tol);
        if (r.status != lp::Status::kOptimal)
          fail(ErrorCode::kSolver, "remove_redundant: probe LP failed");
        if (r.objective <= h(k) + tol) break;  // implied by known facets
        // Shoot from the interior point towards the LP optimizer; the first
        // row crossed is a facet not yet known.
        const VectorXd dir = r.x - center;
        const VectorXd rate = G * dir;
        const VectorXd room = h - G * center;
        Index hit = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Index j = 0; j < q; ++j) {
          if (rate(j) <= 1e-14) continue;
          const double t = room(j) / rate(j);
          if (t < best - 1e-12 * best || (t <= best + 1e-12 * best && j == k)) {
            best = t;
            hit = j;
          }
        }
        if (hit < 0 || in_set[hit]) break;  // numerically on the boundary
        in_set[hit] = true;
        facets.push_back(hit);
      }
    }
    // Ties in the ray test can admit weakly redundant rows; drop them.
    std::sort(facets.begin(), facets.end());
    std::vector<Index> verified = facets;
    for (Index k : facets) {
      std::vector<Index> others;
      for (Index j : verified)
        if (j != k) others.push_back(j);
      const lp::Result r = probe_row(G, h, others, outer.normals, outer.offsets, k, tol);
      if (r.status == lp::Status::kOptimal && r.objective <= h(k) + tol) verified = others;
    }
    keep = verified;
  }

  MatrixXd out_G(static_cast<Index>(keep.size()), n);
  VectorXd out_h(static_cast<Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out_G.row(static_cast<Index>(k)) = G.row(keep[k]);
    out_h(static_cast<Index>(k)) = h(keep[k]);
  }
  return HPolytope(out_G, out_h);
}

// ---------------------------------------------------------------------------
// Vertex enumeration (double description by successive cuts)

namespace {

class Bitset {
 public:
  explicit Bitset(std::size_t bits = 0) : words_((bits + 63) / 64, 0) {}
  void set(std::size_t i) { words_[i / 64] |= (std::uint64_t{1} << (i % 64)); }
  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1U; }
  std::size_t count_and(const Bitset& other) const {
    std::size_t total = 0;
    for (std::size_t w = 0; w < words_.size(); ++w)
      total += static_cast<std::size_t>(std::popcount(words_[w] & other.words_[w]));
    return total;
  }
  Bitset operator&(const Bitset& other) const {
    Bitset out = *this;
    for (std::size_t w = 0; w < words_.size(); ++w) out.words_[w] &= other.words_[w];
    return out;
  }
  std::vector<Index> indices() const {
    std::vector<Index> out;
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t word = words_[w];
      while (word) {
        const int bit = std::countr_zero(word);
        out.push_back(static_cast<Index>(w * 64 + static_cast<std::size_t>(bit)));
        word &= word - 1;
      }
    }
    return out;
  }

 private:
  std::vector<std::uint64_t> words_;
};

struct DdVertex {
  VectorXd point;
  Bitset active;
};

Index row_rank(const MatrixXd& G, const std::vector<Index>& rows) {
  if (rows.empty()) return 0;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(gather_rows(G, rows));
  qr.setThreshold(1e-9);
  return qr.rank();
}

VectorXd polish_vertex(const MatrixXd& G, const VectorXd& h, const std::vector<Index>& rows,
                       const VectorXd& fallback) {
  const MatrixXd A = gather_rows(G, rows);
  Eigen::ColPivHouseholderQR<MatrixXd> qr(A);
  qr.setThreshold(1e-9);
  if (qr.rank() < G.cols()) return fallback;
  return qr.solve(gather(h, rows));
}

// Full-dimensional, bounded, irredundant rows; `lower`/`upper` bound the set.
MatrixXd double_description(const MatrixXd& G, const VectorXd& h, const VectorXd& lower,
                            const VectorXd& upper, const EnumerationOptions& options) {
  const Index n = G.cols();
  const Index q = G.rows();
  require(n <= 20, ErrorCode::kVertexLimit, "vertex_enum: dimension too large");
  const VectorXd margin = 0.1 * (upper - lower).array() + 1e-3;
  const VectorXd lo = lower - margin;
  const VectorXd hi = upper + margin;

  // Rows q.. are the enclosing box: +e_i <= hi_i then -e_i <= -lo_i.
  const Index total = q + 2 * n;
  MatrixXd rows(total, n);
  VectorXd rhs(total);
  rows.topRows(q) = G;
  rhs.head(q) = h;
  for (Index i = 0; i < n; ++i) {
    rows.row(q + i) = VectorXd::Unit(n, i).transpose();
    rhs(q + i) = hi(i);
    rows.row(q + n + i) = -VectorXd::Unit(n, i).transpose();
    rhs(q + n + i) = -lo(i);
  }

  std::vector<DdVertex> verts;
  const std::size_t corners = std::size_t{1} << n;
  for (std::size_t mask = 0; mask < corners; ++mask) {
    DdVertex v{VectorXd(n), Bitset(static_cast<std::size_t>(total))};
    for (Index i = 0; i < n; ++i) {
      const bool upper_side = (mask >> i) & 1U;
      v.point(i) = upper_side ? hi(i) : lo(i);
      v.active.set(static_cast<std::size_t>(upper_side ? q + i : q + n + i));
    }
    verts.push_back(std::move(v));
  }

  const double scale = 1.0 + std::max(lo.cwiseAbs().maxCoeff(), hi.cwiseAbs().maxCoeff());
  const double eps = options.tol * scale;
  for (Index k = 0; k < q; ++k) {
    const VectorXd a = rows.row(k).transpose();
    std::vector<double> value(verts.size());
    std::vector<std::size_t> plus, minus;
    for (std::size_t i = 0; i < verts.size(); ++i) {
      value[i] = a.dot(verts[i].point) - rhs(k);
      if (value[i] > eps) {
        plus.push_back(i);
      } else if (value[i] < -eps) {
        minus.push_back(i);
      } else {
        verts[i].active.set(static_cast<std::size_t>(k));
      }
    }
    if (plus.empty()) continue;

    std::vector<DdVertex> next;
    next.reserve(verts.size());
    for (std::size_t i = 0; i < verts.size(); ++i)
      if (value[i] <= eps) next.push_back(verts[i]);
    for (std::size_t p : plus) {
      for (std::size_t m : minus) {
        if (verts[p].active.count_and(verts[m].active) + 1 < static_cast<std::size_t>(n))
          continue;
        Bitset common = verts[p].active & verts[m].active;
        const std::vector<Index> common_rows = common.indices();
        if (row_rank(rows, common_rows) != n - 1) continue;
        const double t = value[p] / (value[p] - value[m]);
        VectorXd point = verts[p].point + t * (verts[m].point - verts[p].point);
        std::vector<Index> active_rows = common_rows;
        active_rows.push_back(k);
        point = polish_vertex(rows, rhs, active_rows, point);
        common.set(static_cast<std::size_t>(k));
        next.push_back(DdVertex{std::move(point), std::move(common)});
      }
    }
    require(next.size() <= options.vertex_cap, ErrorCode::kVertexLimit,
            "vertex_enum: vertex cap exceeded (" + std::to_string(next.size()) + ")");
    verts = std::move(next);
  }

  MatrixXd out(n, static_cast<Index>(verts.size()));
  for (std::size_t i = 0; i < verts.size(); ++i) out.col(static_cast<Index>(i)) = verts[i].point;
  return out;
}

MatrixXd unique_columns(const MatrixXd& points, double tol) {
  std::vector<Index> order(static_cast<std::size_t>(points.cols()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    for (Index i = 0; i < points.rows(); ++i)
      if (points(i, a) != points(i, b)) return points(i, a) < points(i, b);
    return false;
  });
  std::vector<Index> kept;
  for (Index idx : order) {
    bool dup = false;
    for (auto it = kept.rbegin(); it != kept.rend(); ++it) {
      if (std::abs(points(0, *it) - points(0, idx)) > tol) break;
      if ((points.col(*it) - points.col(idx)).lpNorm<Eigen::Infinity>() <= tol) {
        dup = true;
        break;
      }
    }
    if (!dup) kept.push_back(idx);
  }
  MatrixXd out(points.rows(), static_cast<Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) out.col(static_cast<Index>(k)) = points.col(kept[k]);
  return out;
}

// Connected components of the variable-interaction graph of the rows.
std::vector<std::vector<Index>> variable_groups(const MatrixXd& G) {
  const Index n = G.cols();
  std::vector<Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](Index i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (Index r = 0; r < G.rows(); ++r) {
    Index first = -1;
    for (Index j = 0; j < n; ++j) {
      if (std::abs(G(r, j)) <= 1e-14) continue;
      if (first < 0) {
        first = j;
      } else {
        parent[find(j)] = find(first);
      }
    }
  }
  std::vector<std::vector<Index>> groups;
  std::vector<Index> slot(static_cast<std::size_t>(n), -1);
  for (Index j = 0; j < n; ++j) {
    const Index root = find(j);
    if (slot[root] < 0) {
      slot[root] = static_cast<Index>(groups.size());
      groups.emplace_back();
    }
    groups[slot[root]].push_back(j);
  }
  return groups;
}

}  // namespace

VPolytope vertex_enum(const HPolytope& poly, const EnumerationOptions& options) {
  const Index n = poly.dim();
  require(n > 0, ErrorCode::kInvalidArgument, "vertex_enum: zero dimension");
  const HPolytope reduced = remove_redundant(poly, options.tol);
  const MatrixXd& G = reduced.normals;
  const VectorXd& h = reduced.offsets;

  VectorXd lower(n), upper(n);
  for (Index i = 0; i < n; ++i) {
    for (int sgn : {1, -1}) {
      const lp::Result r = lp::maximize(G, h, sgn * VectorXd::Unit(n, i), lp_options(options.tol));
      if (r.status == lp::Status::kUnbounded)
        fail(ErrorCode::kUnboundedSet, "vertex_enum: polytope is unbounded");
      if (r.status == lp::Status::kInfeasible)
        fail(ErrorCode::kEmptySet, "vertex_enum: polytope is empty");
      require(r.optimal(), ErrorCode::kSolver, "vertex_enum: bounding LP failed");
      (sgn > 0 ? upper : lower)(i) = sgn * r.objective;
    }
  }
  const double width = (upper - lower).maxCoeff();
  const double scale = 1.0 + std::max(lower.cwiseAbs().maxCoeff(), upper.cwiseAbs().maxCoeff());
  if (width <= 1e3 * options.tol * scale) {
    return VPolytope::point(0.5 * (lower + upper));
  }

  const auto groups = variable_groups(G);
  if (groups.size() > 1) {
    // Block-separable rows: the set is a product of lower-dimensional pieces.
    std::vector<MatrixXd> pieces;
    std::size_t count = 1;
    for (const auto& group : groups) {
      const Index d = static_cast<Index>(group.size());
      std::vector<Index> rows_in;
      for (Index r = 0; r < G.rows(); ++r) {
        for (Index j : group) {
          if (std::abs(G(r, j)) > 1e-14) {
            rows_in.push_back(r);
            break;
          }
        }
      }
      MatrixXd sub_G(static_cast<Index>(rows_in.size()), d);
      for (std::size_t k = 0; k < rows_in.size(); ++k)
        for (Index c = 0; c < d; ++c) sub_G(static_cast<Index>(k), c) = G(rows_in[k], group[c]);
      pieces.push_back(vertex_enum(HPolytope(sub_G, gather(h, rows_in)), options).vertices);
      count *= static_cast<std::size_t>(pieces.back().cols());
      require(count <= options.vertex_cap, ErrorCode::kVertexLimit,
              "vertex_enum: vertex cap exceeded in product (" + std::to_string(count) + ")");
    }
    MatrixXd out(n, static_cast<Index>(count));
    for (std::size_t idx = 0; idx < count; ++idx) {
      std::size_t rest = idx;
      for (std::size_t g = 0; g < groups.size(); ++g) {
        const Index cols = pieces[g].cols();
        const Index pick = static_cast<Index>(rest % static_cast<std::size_t>(cols));
        rest /= static_cast<std::size_t>(cols);
        for (std::size_t c = 0; c < groups[g].size(); ++c)
          out(groups[g][c], static_cast<Index>(idx)) = pieces[g](static_cast<Index>(c), pick);
      }
    }
    return VPolytope(out);
  }

  if (n == 1) {
    MatrixXd out(1, 2);
    out << lower(0), upper(0);
    return VPolytope(out);
  }

  // Work in coordinates where the bounding box is [-1, 1]^n: data-driven sets
  // can be orders of magnitude thinner along some axes than others.
  const VectorXd center = 0.5 * (lower + upper);
  const VectorXd half = (0.5 * (upper - lower)).cwiseMax(1e-3 * width);
  MatrixXd Gs = G * half.asDiagonal();
  VectorXd hs = h - G * center;
  for (Index r = 0; r < Gs.rows(); ++r) {
    const double norm = Gs.row(r).norm();
    if (norm > 0.0) {
      Gs.row(r) /= norm;
      hs(r) /= norm;
    }
  }
  const auto ball = lp::chebyshev_ball(Gs, hs, 1e6, lp_options(options.tol));
  require(ball.has_value(), ErrorCode::kEmptySet, "vertex_enum: polytope is empty");
  require(ball->radius > options.tol, ErrorCode::kGeometry,
          "vertex_enum: polytope is not full-dimensional");

  const VectorXd unit = VectorXd::Ones(n);
  const MatrixXd raw = unique_columns(double_description(Gs, hs, -unit, unit, options), 1e-9);
  return VPolytope((half.asDiagonal() * raw).colwise() + center);
}

// ---------------------------------------------------------------------------
// Hulls and facets

namespace {

double cross(const VectorXd& o, const VectorXd& a, const VectorXd& b) {
  return (a(0) - o(0)) * (b(1) - o(1)) - (a(1) - o(1)) * (b(0) - o(0));
}

// Counter-clockwise hull (Andrew's monotone chain), collinear points dropped.
MatrixXd hull_2d(const MatrixXd& points, double tol) {
  std::vector<VectorXd> pts;
  pts.reserve(static_cast<std::size_t>(points.cols()));
  for (Index i = 0; i < points.cols(); ++i) pts.push_back(points.col(i));
  std::sort(pts.begin(), pts.end(), [](const VectorXd& a, const VectorXd& b) {
    return a(0) < b(0) || (a(0) == b(0) && a(1) < b(1));
  });
  const double extent = std::max(1e-300, (points.rowwise().maxCoeff() - points.rowwise().minCoeff())
                                              .maxCoeff());
  const double area_tol = tol * extent * extent;
  std::vector<VectorXd> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= area_tol) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= area_tol) --k;
    hull[k++] = pts[i];
  }
  if (k > 1) --k;
  hull.resize(k);
  if (hull.size() == 2 && (hull[0] - hull[1]).norm() <= tol * extent) hull.resize(1);
  MatrixXd out(2, static_cast<Index>(hull.size()));
  for (std::size_t i = 0; i < hull.size(); ++i) out.col(static_cast<Index>(i)) = hull[i];
  return out;
}

bool in_hull_of(const MatrixXd& points, const std::vector<Index>& candidates,
                const VectorXd& p, double tol) {
  const Index n = points.rows();
  const Index N = static_cast<Index>(candidates.size());
  if (N == 0) return false;
  MatrixXd A(n + 1, N);
  for (Index k = 0; k < N; ++k) {
    A.col(k).head(n) = points.col(candidates[k]);
    A(n, k) = 1.0;
  }
  VectorXd b(n + 1);
  b.head(n) = p;
  b(n) = 1.0;
  lp::Options o;
  o.feasibility_tol = tol / std::max(1.0, b.lpNorm<Eigen::Infinity>());
  return lp::solve_standard_form(A, b, VectorXd::Zero(N), o).optimal();
}

}  // namespace

VPolytope convex_hull(const VPolytope& v, double tol) {
  const Index n = v.dim();
  const Index N = v.num_vertices();
  require(N > 0, ErrorCode::kEmptySet, "convex_hull: no points");
  if (n == 1) {
    const double lo = v.vertices.minCoeff();
    const double hi = v.vertices.maxCoeff();
    if (hi - lo <= tol * (1.0 + std::abs(lo) + std::abs(hi))) return VPolytope::point(VectorXd::Constant(1, lo));
    MatrixXd out(1, 2);
    out << lo, hi;
    return VPolytope(out);
  }
  if (n == 2) return VPolytope(hull_2d(v.vertices, tol));

  const double scale = 1.0 + v.vertices.cwiseAbs().maxCoeff();
  const MatrixXd pts = unique_columns(v.vertices, tol * scale);
  std::vector<bool> alive(static_cast<std::size_t>(pts.cols()), true);
  for (Index i = 0; i < pts.cols(); ++i) {
    std::vector<Index> others;
    for (Index j = 0; j < pts.cols(); ++j)
      if (j != i && alive[j]) others.push_back(j);
    if (in_hull_of(pts, others, pts.col(i), 1e-9 * scale)) alive[i] = false;
  }
  std::vector<Index> keep;
  for (Index i = 0; i < pts.cols(); ++i)
    if (alive[i]) keep.push_back(i);
  MatrixXd out(n, static_cast<Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) out.col(static_cast<Index>(k)) = pts.col(keep[k]);
  return VPolytope(out);
}

HPolytope facet_enum(const VPolytope& v, const EnumerationOptions& options) {
  const Index n = v.dim();
  require(v.num_vertices() > 0, ErrorCode::kEmptySet, "facet_enum: no vertices");
  const VPolytope hull = convex_hull(v);
  const double scale = 1.0 + hull.vertices.cwiseAbs().maxCoeff();
  if (n == 1) {
    require(hull.num_vertices() == 2, ErrorCode::kGeometry,
            "facet_enum: polytope is not full-dimensional");
    MatrixXd G(2, 1);
    G << 1.0, -1.0;
    VectorXd h(2);
    h << hull.vertices(0, 1), -hull.vertices(0, 0);
    return HPolytope(G, h);
  }
  if (n == 2) {
    const Index N = hull.num_vertices();
    require(N >= 3, ErrorCode::kGeometry, "facet_enum: polygon is not full-dimensional");
    MatrixXd G(N, 2);
    VectorXd h(N);
    for (Index i = 0; i < N; ++i) {
      const VectorXd a = hull.vertices.col(i);
      const VectorXd b = hull.vertices.col((i + 1) % N);
      Eigen::Vector2d normal(b(1) - a(1), a(0) - b(0));
      normal.normalize();
      G.row(i) = normal.transpose();
      h(i) = normal.dot(a);
    }
    return HPolytope(G, h);
  }

  require(hull.num_vertices() > n, ErrorCode::kGeometry,
          "facet_enum: polytope is not full-dimensional");
  const VectorXd center = hull.centroid();
  const MatrixXd shifted = hull.vertices.colwise() - center;
  const HPolytope polar(shifted.transpose(), VectorXd::Ones(hull.num_vertices()));
  VPolytope dual;
  try {
    dual = vertex_enum(polar, options);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kUnboundedSet)
      fail(ErrorCode::kGeometry, "facet_enum: polytope is not full-dimensional");
    throw;
  }
  require(dual.num_vertices() > n, ErrorCode::kGeometry,
          "facet_enum: polytope is not full-dimensional");
  MatrixXd G = dual.vertices.transpose();
  VectorXd h = VectorXd::Ones(G.rows()) + G * center;
  for (Index i = 0; i < G.rows(); ++i) {
    const double norm = G.row(i).norm();
    G.row(i) /= norm;
    h(i) /= norm;
  }
  (void)scale;
  return HPolytope(G, h);
}

// ---------------------------------------------------------------------------
// Minkowski arithmetic

VPolytope minkowski_sum(const VPolytope& a, const VPolytope& b) {
  require(a.dim() == b.dim(), ErrorCode::kDimensionMismatch, "minkowski_sum: dimension mismatch");
  require(a.num_vertices() > 0 && b.num_vertices() > 0, ErrorCode::kEmptySet,
          "minkowski_sum: empty operand");
  MatrixXd sums(a.dim(), a.num_vertices() * b.num_vertices());
  for (Index i = 0; i < a.num_vertices(); ++i)
    for (Index j = 0; j < b.num_vertices(); ++j)
      sums.col(i * b.num_vertices() + j) = a.vertices.col(i) + b.vertices.col(j);
  return convex_hull(VPolytope(sums));
}

VPolytope linear_image(const MatrixXd& A, const VPolytope& s) {
  require(A.cols() == s.dim(), ErrorCode::kDimensionMismatch, "linear_image: dimension mismatch");
  return convex_hull(VPolytope(A * s.vertices));
}

VPolytope scale(const VPolytope& s, double factor) { return VPolytope(s.vertices * factor); }

bool contains_point(const VPolytope& t, const VectorXd& p, double tol) {
  require(t.dim() == p.size(), ErrorCode::kDimensionMismatch, "contains_point: dimension");
  std::vector<Index> all(static_cast<std::size_t>(t.num_vertices()));
  std::iota(all.begin(), all.end(), 0);
  return in_hull_of(t.vertices, all, p, tol);
}

bool contains_inflated(const VPolytope& s, const VPolytope& t, double eps,
                       const VPolytope& omega, double tol) {
  require(eps >= 0.0, ErrorCode::kInvalidArgument, "contains_inflated: eps must be >= 0");
  require(s.dim() == t.dim() && t.dim() == omega.dim(), ErrorCode::kDimensionMismatch,
          "contains_inflated: dimension mismatch");
  if (eps == 0.0) {
    for (Index v = 0; v < s.num_vertices(); ++v)
      if (!contains_point(t, s.vertices.col(v), tol)) return false;
    return true;
  }
  const Index n = s.dim();
  const Index nt = t.num_vertices();
  const Index no = omega.num_vertices();
  MatrixXd A = MatrixXd::Zero(n + 2, nt + no);
  A.topLeftCorner(n, nt) = t.vertices;
  A.topRightCorner(n, no) = eps * omega.vertices;
  A.row(n).head(nt).setOnes();
  A.row(n + 1).tail(no).setOnes();
  for (Index v = 0; v < s.num_vertices(); ++v) {
    VectorXd b(n + 2);
    b.head(n) = s.vertices.col(v);
    b(n) = 1.0;
    b(n + 1) = 1.0;
    lp::Options o;
    o.feasibility_tol = tol / std::max(1.0, b.lpNorm<Eigen::Infinity>());
    if (!lp::solve_standard_form(A, b, VectorXd::Zero(nt + no), o).optimal()) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Circumscribed polytopes

namespace {

MatrixXd whitened_directions(Index n, int count) {
  if (n == 1) {
    MatrixXd d(1, 2);
    d << 1.0, -1.0;
    return d;
  }
  if (n == 2) {
    MatrixXd d(2, count);
    for (int k = 0; k < count; ++k) {
      const double theta = 2.0 * M_PI * k / count;
      d(0, k) = std::cos(theta);
      d(1, k) = std::sin(theta);
    }
    return d;
  }
  // Golden-spiral cover of the sphere (n = 3) or its analogue via a fixed
  // seeded Gaussian draw for n > 3, mirrored for central symmetry.
  const int half = std::max<int>(static_cast<int>(n), (count + 1) / 2);
  MatrixXd d(n, 2 * half);
  if (n == 3) {
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < half; ++k) {
      const double z = 1.0 - (k + 0.5) / half;  // upper hemisphere
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * k;
      d.col(k) << r * std::cos(phi), r * std::sin(phi), z;
    }
  } else {
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> normal;
    for (int k = 0; k < half; ++k) {
      VectorXd g(n);
      for (Index i = 0; i < n; ++i) g(i) = normal(rng);
      d.col(k) = g.normalized();
    }
  }
  d.rightCols(half) = -d.leftCols(half);
  return d;
}

}  // namespace

Circumscribed circumscribe(const MatrixXd& P, int directions) {
  require(is_spd(P), ErrorCode::kInvalidArgument, "circumscribe: P must be SPD");
  const Index n = P.rows();
  require(n == 1 || directions >= n + 1, ErrorCode::kInvalidArgument,
          "circumscribe: need at least n+1 directions");
  const MatrixXd root = spd_sqrt(P);
  const MatrixXd inv_root = spd_inverse_sqrt(P);
  const MatrixXd E = whitened_directions(n, directions);

  // Tangent halfspace of the whitened unit ball e'w <= 1, mapped by z = P^{1/2} w.
  MatrixXd G = (inv_root * E).transpose();
  VectorXd h = VectorXd::Ones(G.rows());
  const HPolytope facets = HPolytope(G, h).normalized();

  VPolytope vertices;
  if (n == 2) {
    const int M = static_cast<int>(E.cols());
    MatrixXd w(2, M);
    const double radius = 1.0 / std::cos(M_PI / M);
    for (int k = 0; k < M; ++k) {
      const double phi = 2.0 * M_PI * (k + 0.5) / M;
      w(0, k) = radius * std::cos(phi);
      w(1, k) = radius * std::sin(phi);
    }
    vertices = VPolytope(root * w);
  } else {
    vertices = vertex_enum(facets);
  }
  const MatrixXd P_inv = P.inverse();
  double kappa = 0.0;
  for (Index k = 0; k < vertices.num_vertices(); ++k) {
    const VectorXd w = vertices.vertices.col(k);
    kappa = std::max(kappa, std::sqrt(w.dot(P_inv * w)));
  }
  return Circumscribed{GaugePolytope(facets, vertices), kappa, static_cast<int>(E.cols())};
}

// ---------------------------------------------------------------------------
// Volumes

namespace {

double unit_ball_volume(Index n) {
  return std::pow(M_PI, 0.5 * static_cast<double>(n)) /
         std::tgamma(0.5 * static_cast<double>(n) + 1.0);
}

double polygon_area(const MatrixXd& ccw) {
  double area = 0.0;
  const Index N = ccw.cols();
  for (Index i = 0; i < N; ++i) {
    const Index j = (i + 1) % N;
    area += ccw(0, i) * ccw(1, j) - ccw(0, j) * ccw(1, i);
  }
  return 0.5 * std::abs(area);
}

double volume_recursive(const MatrixXd& points) {
  const Index n = points.rows();
  if (points.cols() == 0) return 0.0;
  if (n == 1) return points.maxCoeff() - points.minCoeff();
  const VPolytope hull = convex_hull(VPolytope(points));
  if (n == 2) return hull.num_vertices() < 3 ? 0.0 : polygon_area(hull.vertices);

  HPolytope facets;
  try {
    facets = facet_enum(hull);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kGeometry) return 0.0;
    throw;
  }
  const VectorXd center = hull.centroid();
  const double scale = 1.0 + hull.vertices.cwiseAbs().maxCoeff();
  double total = 0.0;
  for (Index f = 0; f < facets.num_rows(); ++f) {
    const VectorXd g = facets.normals.row(f).transpose();
    const double height = facets.offsets(f) - g.dot(center);
    std::vector<Index> on_facet;
    for (Index v = 0; v < hull.num_vertices(); ++v)
      if (std::abs(g.dot(hull.vertices.col(v)) - facets.offsets(f)) <= 1e-8 * scale)
        on_facet.push_back(v);
    if (static_cast<Index>(on_facet.size()) < n) continue;
    // Orthonormal coordinates in the facet hyperplane.
    Eigen::HouseholderQR<MatrixXd> qr(g);
    const MatrixXd Q = qr.householderQ();
    const MatrixXd basis = Q.rightCols(n - 1);
    MatrixXd projected(n - 1, static_cast<Index>(on_facet.size()));
    for (std::size_t k = 0; k < on_facet.size(); ++k)
      projected.col(static_cast<Index>(k)) = basis.transpose() * hull.vertices.col(on_facet[k]);
    total += height * volume_recursive(projected) / static_cast<double>(n);
  }
  return total;
}

}  // namespace

double volume(const VPolytope& s) {
  require(s.num_vertices() > 0, ErrorCode::kEmptySet, "volume: empty polytope");
  return volume_recursive(s.vertices);
}

double ellipsoid_volume(const MatrixXd& P, double r) {
  require(is_spd(P), ErrorCode::kInvalidArgument, "ellipsoid_volume: P must be SPD");
  const Index n = P.rows();
  return unit_ball_volume(n) * std::pow(r, static_cast<double>(n)) * std::sqrt(P.determinant());
}

}  // namespace rpi_forge::geom
