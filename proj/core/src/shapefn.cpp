#include "stdic/shapefn.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "stdic/error.hpp"

namespace stdic {

MonomialPowers powers(Monomial m) noexcept {
  switch (m) {
    case Monomial::One: return {0, 0, 0};
    case Monomial::X: return {1, 0, 0};
    case Monomial::Y: return {0, 1, 0};
    case Monomial::T: return {0, 0, 1};
    case Monomial::XT: return {1, 0, 1};
    case Monomial::YT: return {0, 1, 1};
    case Monomial::XX: return {2, 0, 0};
    case Monomial::XY: return {1, 1, 0};
    case Monomial::YY: return {0, 2, 0};
    case Monomial::TT: return {0, 0, 2};
  }
  return {0, 0, 0};
}

const char* suffix(Monomial m) noexcept {
  switch (m) {
    case Monomial::One: return "";
    case Monomial::X: return "x";
    case Monomial::Y: return "y";
    case Monomial::T: return "t";
    case Monomial::XT: return "xt";
    case Monomial::YT: return "yt";
    case Monomial::XX: return "xx";
    case Monomial::XY: return "xy";
    case Monomial::YY: return "yy";
    case Monomial::TT: return "tt";
  }
  return "?";
}

double evaluate(Monomial m, double dx, double dy, double dt) noexcept {
  switch (m) {
    case Monomial::One: return 1.0;
    case Monomial::X: return dx;
    case Monomial::Y: return dy;
    case Monomial::T: return dt;
    case Monomial::XT: return dx * dt;
    case Monomial::YT: return dy * dt;
    case Monomial::XX: return dx * dx;
    case Monomial::XY: return dx * dy;
    case Monomial::YY: return dy * dy;
    case Monomial::TT: return dt * dt;
  }
  return 0.0;
}

ShapeFunctionSpec::ShapeFunctionSpec(int spatial_order, int temporal_order, CrossTerms cross,
                                     int window)
    : spatial_order_(spatial_order), temporal_order_(temporal_order), cross_(cross), window_(window) {
  if (spatial_order < 0 || spatial_order > 2 || temporal_order < 0 || temporal_order > 2) {
    throw Error(ErrorCode::InvalidArgument, "shape function orders must lie in {0, 1, 2}");
  }
  if (window < 1 || window % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument, "temporal window must be a positive odd frame count");
  }
  if ((temporal_order >= 1 || cross.any()) && window < 3) {
    throw Error(ErrorCode::InvalidArgument, "temporal terms need a window of at least 3 frames");
  }
  for (const Monomial m : kMonomialOrder) {
    const MonomialPowers pw = powers(m);
    const int spatial = pw.x + pw.y;
    bool active = false;
    if (m == Monomial::XT) {
      active = cross.xt;
    } else if (m == Monomial::YT) {
      active = cross.yt;
    } else if (pw.t == 0) {
      active = spatial <= spatial_order;
    } else {
      active = pw.t <= temporal_order;
    }
    if (active) monomials_.push_back(m);
  }
}

std::optional<int> ShapeFunctionSpec::index_of(Monomial m) const noexcept {
  const auto it = std::find(monomials_.begin(), monomials_.end(), m);
  if (it == monomials_.end()) return std::nullopt;
  return static_cast<int>(it - monomials_.begin());
}

std::string ShapeFunctionSpec::tag() const {
  std::string s = "s" + std::to_string(spatial_order_) + "t" + std::to_string(temporal_order_);
  if (cross_.xt) s += "-xt";
  if (cross_.yt) s += "-yt";
  s += "-m" + std::to_string(window_);
  return s;
}

std::vector<int> window_offsets(int window) {
  std::vector<int> out;
  const int half = (window - 1) / 2;
  for (int t = -half; t <= half; ++t) out.push_back(t);
  return out;
}

BasisVector basis_at(const ShapeFunctionSpec& spec, double dx, double dy, double dt) {
  BasisVector b;
  for (const Monomial m : spec.monomials()) b.push(evaluate(m, dx, dy, dt));
  return b;
}

ParamSet::ParamSet(int basis_size, Eigen::VectorXd flat) : k_(basis_size), values_(std::move(flat)) {
  if (values_.size() != 2 * basis_size) {
    throw Error(ErrorCode::LengthMismatch, "flat parameter vector must hold 2k values");
  }
}

std::optional<double> ParamSet::get_u(const ParamSet& p, const ShapeFunctionSpec& spec, Monomial m) {
  const auto i = spec.index_of(m);
  if (!i) return std::nullopt;
  return p.u(*i);
}

std::optional<double> ParamSet::get_v(const ParamSet& p, const ShapeFunctionSpec& spec, Monomial m) {
  const auto i = spec.index_of(m);
  if (!i) return std::nullopt;
  return p.v(*i);
}

std::vector<std::string> param_names(const ShapeFunctionSpec& spec) {
  std::vector<std::string> names;
  for (const char* comp : {"u", "v"}) {
    for (const Monomial m : spec.monomials()) names.push_back(std::string(comp) + suffix(m));
  }
  return names;
}

WarpedPoint warp_point(const ParamSet& p, const BasisVector& basis, double dx, double dy) {
  double x = dx;
  double y = dy;
  for (int i = 0; i < basis.size(); ++i) {
    x += p.u(i) * basis[i];
    y += p.v(i) * basis[i];
  }
  return {x, y};
}

WarpedPoint warp_point(const ParamSet& p, const ShapeFunctionSpec& spec, double dx, double dy,
                       double dt) {
  if (p.basis_size() != spec.basis_size()) {
    throw Error(ErrorCode::LengthMismatch, "parameter set does not match the shape function");
  }
  return warp_point(p, basis_at(spec, dx, dy, dt), dx, dy);
}

Eigen::MatrixXd block_jacobian(std::span<const double> basis, int dims) {
  const auto k = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(dims, dims * k);
  for (int d = 0; d < dims; ++d) {
    for (Eigen::Index i = 0; i < k; ++i) j(d, d * k + i) = basis[static_cast<std::size_t>(i)];
  }
  return j;
}

Eigen::Matrix<double, 2, Eigen::Dynamic> shape_jacobian(const ShapeFunctionSpec& spec, double dx,
                                                        double dy, double dt) {
  const BasisVector b = basis_at(spec, dx, dy, dt);
  return block_jacobian(b.values(), 2);
}

// ---------------------------------------------------------------------------
// Warp embedding

namespace {

std::optional<Monomial> times_t(Monomial m) noexcept {
  switch (m) {
    case Monomial::One: return Monomial::T;
    case Monomial::X: return Monomial::XT;
    case Monomial::Y: return Monomial::YT;
    case Monomial::T: return Monomial::TT;
    default: return std::nullopt;
  }
}

int column_of(std::span<const Monomial> coords, Monomial m) {
  const auto it = std::find(coords.begin(), coords.end(), m);
  return it == coords.end() ? -1 : static_cast<int>(it - coords.begin());
}

Eigen::MatrixXd structured_matrix(const ShapeFunctionSpec& spec, std::span<const Monomial> coords,
                                  const ParamSet& p) {
  const auto n = static_cast<Eigen::Index>(coords.size());
  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(n, n);
  const int cx = column_of(coords, Monomial::X);
  const int cy = column_of(coords, Monomial::Y);

  const auto monos = spec.monomials();
  for (std::size_t i = 0; i < monos.size(); ++i) {
    const int c = column_of(coords, monos[i]);
    w(cx, c) += p.u(static_cast<int>(i));
    w(cy, c) += p.v(static_cast<int>(i));
  }

  // dx*dt and dy*dt rows: dt times the displaced rows, truncated.
  const auto fill_rate_row = [&](Monomial rate, int source_row) {
    const int r = column_of(coords, rate);
    if (r < 0) return;
    w.row(r).setZero();
    for (Eigen::Index c = 0; c < n; ++c) {
      const double a = w(source_row, c);
      if (a == 0.0) continue;
      const auto target = times_t(coords[static_cast<std::size_t>(c)]);
      if (!target) continue;
      const int tc = column_of(coords, *target);
      if (tc >= 0) w(r, tc) += a;
    }
  };
  fill_rate_row(Monomial::XT, cx);
  fill_rate_row(Monomial::YT, cy);
  return w;
}

void require_warp_capable(const ShapeFunctionSpec& spec) {
  if (!spec.warp_capable()) {
    throw Error(ErrorCode::UnsupportedSpec,
                "shape function " + spec.tag() + " has no homogeneous warp embedding");
  }
}

}  // namespace

std::vector<Monomial> warp_coordinates(const ShapeFunctionSpec& spec) {
  require_warp_capable(spec);
  std::vector<Monomial> coords;
  for (const Monomial m : kMonomialOrder) {
    if (spec.has(m) || m == Monomial::X || m == Monomial::Y) coords.push_back(m);
  }
  return coords;
}

WarpMatrix::WarpMatrix(ShapeFunctionSpec spec, Eigen::MatrixXd matrix)
    : spec_(std::move(spec)), coords_(warp_coordinates(spec_)), matrix_(std::move(matrix)) {
  const auto n = static_cast<Eigen::Index>(coords_.size());
  if (matrix_.rows() != n || matrix_.cols() != n) {
    throw Error(ErrorCode::LengthMismatch, "warp matrix dimension does not match the shape function");
  }
}

WarpMatrix WarpMatrix::identity(const ShapeFunctionSpec& spec) {
  const auto n = static_cast<Eigen::Index>(warp_coordinates(spec).size());
  return WarpMatrix(spec, Eigen::MatrixXd::Identity(n, n));
}

int WarpMatrix::row_of(Monomial m) const {
  const int r = column_of(coords_, m);
  if (r < 0) throw Error(ErrorCode::InvalidArgument, "monomial not part of the warp coordinates");
  return r;
}

Eigen::VectorXd WarpMatrix::coordinate_vector(double dx, double dy, double dt) const {
  Eigen::VectorXd x(dimension());
  for (int i = 0; i < dimension(); ++i) x[i] = evaluate(coords_[static_cast<std::size_t>(i)], dx, dy, dt);
  return x;
}

WarpedPoint WarpMatrix::apply(double dx, double dy, double dt) const {
  const Eigen::VectorXd x = coordinate_vector(dx, dy, dt);
  return {matrix_.row(row_of(Monomial::X)).dot(x), matrix_.row(row_of(Monomial::Y)).dot(x)};
}

WarpMatrix to_warp(const ParamSet& p, const ShapeFunctionSpec& spec) {
  require_warp_capable(spec);
  if (p.basis_size() != spec.basis_size()) {
    throw Error(ErrorCode::LengthMismatch, "parameter set does not match the shape function");
  }
  const auto coords = warp_coordinates(spec);
  return WarpMatrix(spec, structured_matrix(spec, coords, p));
}

ParamSet from_warp(const WarpMatrix& w) {
  const ShapeFunctionSpec& spec = w.spec();
  const int rx = w.row_of(Monomial::X);
  const int ry = w.row_of(Monomial::Y);
  ParamSet p(spec.basis_size());
  const auto monos = spec.monomials();
  for (std::size_t i = 0; i < monos.size(); ++i) {
    const int c = column_of(w.coordinates(), monos[i]);
    p.u(static_cast<int>(i)) = w.matrix()(rx, c) - (monos[i] == Monomial::X ? 1.0 : 0.0);
    p.v(static_cast<int>(i)) = w.matrix()(ry, c) - (monos[i] == Monomial::Y ? 1.0 : 0.0);
  }
  return p;
}

WarpMatrix compose(const WarpMatrix& a, const WarpMatrix& b) {
  if (!(a.spec() == b.spec())) {
    throw Error(ErrorCode::InvalidArgument, "cannot compose warps of different shape functions");
  }
  return WarpMatrix(a.spec(), a.matrix() * b.matrix());
}

WarpMatrix invert(const WarpMatrix& w) {
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(w.matrix());
  const double det = lu.determinant();
  if (!(std::abs(det) > 1e-12)) {
    throw Error(ErrorCode::SingularWarp, "warp matrix is singular");
  }
  const WarpMatrix raw(w.spec(), lu.inverse());
  return to_warp(from_warp(raw), w.spec());
}

}  // namespace stdic
