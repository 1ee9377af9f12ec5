#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

/// Convex set kernel: polytopes in both representations, origin-centred
/// ellipsoids, gauges (Minkowski functionals), induced operator norms,
/// Minkowski arithmetic, and inclusion/volume queries.
///
/// Conventions: an H-polytope is {z : normals z <= offsets}; a V-polytope
/// stores one vertex per column. All inclusion tests use an absolute
/// tolerance on row-normalized residuals (default 1e-8).
namespace rpi_forge::geom {

inline constexpr double kDefaultTol = 1e-8;

struct HPolytope {
  Eigen::MatrixXd normals;  // q x n
  Eigen::VectorXd offsets;  // q

  HPolytope() = default;
  HPolytope(Eigen::MatrixXd normals_in, Eigen::VectorXd offsets_in);

  Eigen::Index dim() const { return normals.cols(); }
  Eigen::Index num_rows() const { return normals.rows(); }
  bool contains(const Eigen::VectorXd& z, double tol = kDefaultTol) const;
  /// Largest row-normalized violation max_l (g_l z - h_l)/|g_l|.
  double max_violation(const Eigen::VectorXd& z) const;
  /// Same normals, offsets multiplied by `factor` (= factor * set when 0 is inside).
  HPolytope scaled(double factor) const;
  /// Rows scaled to unit norm.
  HPolytope normalized() const;

  static HPolytope box(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);
  /// {z : |z|_inf <= bound}.
  static HPolytope cube(Eigen::Index n, double bound);
};

struct VPolytope {
  Eigen::MatrixXd vertices;  // n x N

  VPolytope() = default;
  explicit VPolytope(Eigen::MatrixXd vertices_in) : vertices(std::move(vertices_in)) {}

  Eigen::Index dim() const { return vertices.rows(); }
  Eigen::Index num_vertices() const { return vertices.cols(); }
  /// max_v d'v.
  double support(const Eigen::VectorXd& direction) const;
  Eigen::VectorXd centroid() const { return vertices.rowwise().mean(); }

  static VPolytope point(const Eigen::VectorXd& p);
};

/// Origin-centred ellipsoid {z : z' Q^{-1} z <= 1}.
struct Ellipsoid {
  Eigen::MatrixXd shape;

  Ellipsoid() = default;
  explicit Ellipsoid(Eigen::MatrixXd Q);

  Eigen::Index dim() const { return shape.rows(); }
  bool contains(const Eigen::VectorXd& z, double tol = kDefaultTol) const;
};

/// Polytope with the origin in its interior, carried in both representations
/// so gauges need only the facets and induced norms the facet/vertex pairs.
class GaugePolytope {
 public:
  explicit GaugePolytope(const HPolytope& base);
  explicit GaugePolytope(const VPolytope& base);
  GaugePolytope(const HPolytope& facets, const VPolytope& vertices);

  const HPolytope& facets() const { return facets_; }
  const VPolytope& vertices() const { return vertices_; }
  Eigen::Index dim() const { return facets_.dim(); }

 private:
  void validate() const;

  HPolytope facets_;
  VPolytope vertices_;
};

double gauge(const GaugePolytope& set, const Eigen::VectorXd& z);
double gauge(const HPolytope& set, const Eigen::VectorXd& z);
double gauge(const Ellipsoid& set, const Eigen::VectorXd& z);

/// sup_{z != 0} gauge(Az)/gauge(z) = max over facets l and vertices v of
/// g_l'Av / h_l.
double induced_gauge_norm(const Eigen::MatrixXd& A, const GaugePolytope& set);

/// Induced norm of A for |z|_{P^{-1}} = sqrt(z'P^{-1}z): spectral norm of
/// P^{-1/2} A P^{1/2}.
double induced_ellipsoidal_norm(const Eigen::MatrixXd& A, const Eigen::MatrixXd& P);

struct EnumerationOptions {
  double tol = 1e-9;
  std::size_t vertex_cap = 100000;
};

/// Drops every row that is implied by the others (one LP per surviving
/// candidate, output-sensitive). Exact duplicates collapse to one row.
HPolytope remove_redundant(const HPolytope& h, double tol = 1e-9);

/// Vertices of a bounded polytope by the double-description method after
/// redundancy removal. Independent variable groups (block-separable rows) are
/// enumerated separately and recombined as a Cartesian product. A set of
/// zero width is returned as its single point.
VPolytope vertex_enum(const HPolytope& h, const EnumerationOptions& options = {});

/// Facets of a full-dimensional V-polytope (normalized rows).
HPolytope facet_enum(const VPolytope& v, const EnumerationOptions& options = {});

/// Extreme points only; duplicates and interior points removed.
VPolytope convex_hull(const VPolytope& v, double tol = 1e-10);

VPolytope minkowski_sum(const VPolytope& a, const VPolytope& b);
VPolytope linear_image(const Eigen::MatrixXd& A, const VPolytope& s);
VPolytope scale(const VPolytope& s, double factor);

/// Membership of a point in conv(t) (one feasibility LP).
bool contains_point(const VPolytope& t, const Eigen::VectorXd& p, double tol = kDefaultTol);

/// True iff every vertex of s decomposes as t_pt + eps * omega_pt.
bool contains_inflated(const VPolytope& s, const VPolytope& t, double eps,
                       const VPolytope& omega, double tol = kDefaultTol);

struct Circumscribed {
  GaugePolytope omega;
  double kappa;
  int directions;
};

/// Polytope of tangent halfspaces d'z <= sqrt(d'Pd) of {z'P^{-1}z <= 1}, with
/// directions spread uniformly in whitened coordinates (equally spaced
/// angles in 2-D, a symmetric golden-spiral cover in higher dimension), and
/// kappa = max over its vertices of |w|_{P^{-1}}.
Circumscribed circumscribe(const Eigen::MatrixXd& P, int directions);

double volume(const VPolytope& s);
/// Volume of r * {z'P^{-1}z <= 1}.
double ellipsoid_volume(const Eigen::MatrixXd& P, double r);

/// Symmetric positive definite square root and its inverse.
Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& P);
Eigen::MatrixXd spd_inverse_sqrt(const Eigen::MatrixXd& P);
bool is_spd(const Eigen::MatrixXd& P, double tol = 1e-12);

}  // namespace rpi_forge::geom
