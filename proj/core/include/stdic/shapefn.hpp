#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace stdic {

// Taylor monomials in the subset-local coordinates (dx, dy) and the frame
// offset dt. The enumerator order is the library-wide basis ordering:
//   [1, dx, dy, dt, dx*dt, dy*dt, dx^2, dx*dy, dy^2, dt^2]
// and every BasisVector, ParamSet, Jacobian column block and warp matrix
// filters this list, never reorders it.
enum class Monomial : std::uint8_t { One, X, Y, T, XT, YT, XX, XY, YY, TT };

inline constexpr std::array<Monomial, 10> kMonomialOrder = {
    Monomial::One, Monomial::X,  Monomial::Y,  Monomial::T,  Monomial::XT,
    Monomial::YT,  Monomial::XX, Monomial::XY, Monomial::YY, Monomial::TT};

struct MonomialPowers {
  int x;
  int y;
  int t;
};

MonomialPowers powers(Monomial m) noexcept;
// Parameter-name suffix: "" for the constant, then "x", "y", "t", "xt", ...
const char* suffix(Monomial m) noexcept;
double evaluate(Monomial m, double dx, double dy, double dt) noexcept;

struct CrossTerms {
  bool xt = false;
  bool yt = false;

  bool any() const noexcept { return xt || yt; }
  friend bool operator==(const CrossTerms&, const CrossTerms&) = default;
};

class ShapeFunctionSpec {
 public:
  // spatial/temporal order in {0,1,2}; window is the odd temporal frame count.
  // Throws InvalidArgument when temporal terms are requested with window < 3.
  ShapeFunctionSpec(int spatial_order = 1, int temporal_order = 0, CrossTerms cross = {},
                    int window = 1);

  int spatial_order() const noexcept { return spatial_order_; }
  int temporal_order() const noexcept { return temporal_order_; }
  CrossTerms cross_terms() const noexcept { return cross_; }
  int window() const noexcept { return window_; }
  int half_window() const noexcept { return (window_ - 1) / 2; }

  std::span<const Monomial> monomials() const noexcept { return monomials_; }
  int basis_size() const noexcept { return static_cast<int>(monomials_.size()); }
  int param_count() const noexcept { return 2 * basis_size(); }
  std::optional<int> index_of(Monomial m) const noexcept;
  bool has(Monomial m) const noexcept { return index_of(m).has_value(); }

  // A homogeneous warp embedding exists (to_warp/compose/invert usable).
  bool warp_capable() const noexcept { return spatial_order_ <= 1; }
  bool has_gradients() const noexcept { return has(Monomial::X) && has(Monomial::Y); }

  // Compact tag such as "s1t1-xt-yt-m5".
  std::string tag() const;

  friend bool operator==(const ShapeFunctionSpec& a, const ShapeFunctionSpec& b) {
    return a.spatial_order_ == b.spatial_order_ && a.temporal_order_ == b.temporal_order_ &&
           a.cross_ == b.cross_ && a.window_ == b.window_;
  }

 private:
  int spatial_order_;
  int temporal_order_;
  CrossTerms cross_;
  int window_;
  std::vector<Monomial> monomials_;
};

// Frame offsets used by a window of m frames: -(m-1)/2 .. (m-1)/2.
std::vector<int> window_offsets(int window);

// Values of the active monomials at one space-time point. Capacity is the full
// monomial table so building one never allocates.
class BasisVector {
 public:
  BasisVector() = default;

  int size() const noexcept { return size_; }
  double operator[](int i) const noexcept { return values_[static_cast<std::size_t>(i)]; }
  std::span<const double> values() const noexcept {
    return {values_.data(), static_cast<std::size_t>(size_)};
  }
  void push(double v) noexcept { values_[static_cast<std::size_t>(size_++)] = v; }

 private:
  std::array<double, kMonomialOrder.size()> values_{};
  int size_ = 0;
};

BasisVector basis_at(const ShapeFunctionSpec& spec, double dx, double dy, double dt);

// Parameters of both displacement components, stored flat as
// [u, u_x, u_y, ... | v, v_x, v_y, ...] following the spec's monomial order.
class ParamSet {
 public:
  ParamSet() = default;
  explicit ParamSet(int basis_size) : k_(basis_size), values_(Eigen::VectorXd::Zero(2 * basis_size)) {}
  ParamSet(int basis_size, Eigen::VectorXd flat);

  static ParamSet zero(const ShapeFunctionSpec& spec) { return ParamSet(spec.basis_size()); }

  int basis_size() const noexcept { return k_; }
  int size() const noexcept { return 2 * k_; }

  double& u(int i) { return values_[i]; }
  double u(int i) const { return values_[i]; }
  double& v(int i) { return values_[k_ + i]; }
  double v(int i) const { return values_[k_ + i]; }

  // Rigid displacement of the subset centre.
  double disp_u() const { return values_[0]; }
  double disp_v() const { return values_[k_]; }

  const Eigen::VectorXd& flat() const noexcept { return values_; }
  Eigen::VectorXd& flat() noexcept { return values_; }

  // Named access by monomial; nullopt if the spec lacks the term.
  static std::optional<double> get_u(const ParamSet& p, const ShapeFunctionSpec& spec, Monomial m);
  static std::optional<double> get_v(const ParamSet& p, const ShapeFunctionSpec& spec, Monomial m);

 private:
  int k_ = 0;
  Eigen::VectorXd values_;
};

// Column headers for a ParamSet in CSV output: u, ux, uy, ut, ... , v, vx, ...
std::vector<std::string> param_names(const ShapeFunctionSpec& spec);

struct WarpedPoint {
  double x;
  double y;
};

// Subset-local position after deformation: (dx + u.basis, dy + v.basis).
WarpedPoint warp_point(const ParamSet& p, const ShapeFunctionSpec& spec, double dx, double dy,
                       double dt);
WarpedPoint warp_point(const ParamSet& p, const BasisVector& basis, double dx, double dy);

// d(x~, y~)/dp = [X_H^T 0; 0 X_H^T]. Independent of p.
Eigen::Matrix<double, 2, Eigen::Dynamic> shape_jacobian(const ShapeFunctionSpec& spec, double dx,
                                                        double dy, double dt);

// The same block layout for any number of displaced dimensions
// (dims x dims*k); dims = 3 is the volumetric case.
Eigen::MatrixXd block_jacobian(std::span<const double> basis, int dims);

// Homogeneous warp acting on the extended coordinate vector of the spec:
// the active monomials plus dx and dy if the spec itself lacks them.
// Row for 1 and the pure-time rows (dt, dt^2) are unit rows; the dx / dy rows
// carry the parameters; the dx*dt / dy*dt rows are dt times the dx / dy rows
// with terms that leave the coordinate set dropped.
class WarpMatrix {
 public:
  WarpMatrix(ShapeFunctionSpec spec, Eigen::MatrixXd matrix);

  static WarpMatrix identity(const ShapeFunctionSpec& spec);

  const ShapeFunctionSpec& spec() const noexcept { return spec_; }
  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  std::span<const Monomial> coordinates() const noexcept { return coords_; }
  int dimension() const noexcept { return static_cast<int>(coords_.size()); }
  int row_of(Monomial m) const;

  // Extended coordinate vector at a space-time point.
  Eigen::VectorXd coordinate_vector(double dx, double dy, double dt) const;
  // Applies the x~ / y~ rows only.
  WarpedPoint apply(double dx, double dy, double dt) const;

 private:
  ShapeFunctionSpec spec_;
  std::vector<Monomial> coords_;
  Eigen::MatrixXd matrix_;
};

// Coordinates of the warp embedding for a warp-capable spec.
std::vector<Monomial> warp_coordinates(const ShapeFunctionSpec& spec);

// Throws UnsupportedSpec when !spec.warp_capable().
WarpMatrix to_warp(const ParamSet& p, const ShapeFunctionSpec& spec);
// Reads the parameters off the x~ / y~ rows.
ParamSet from_warp(const WarpMatrix& w);
// Plain matrix product a*b.
WarpMatrix compose(const WarpMatrix& a, const WarpMatrix& b);
// Matrix inverse re-projected onto the structured form: the x~/y~ rows of the
// numeric inverse are kept and every other row is rebuilt from them.
// Throws SingularWarp when |det| <= 1e-12.
WarpMatrix invert(const WarpMatrix& w);

}  // namespace stdic
