#include <Eigen/Dense>

#include <cmath>
#include <algorithm>
#include <numbers>
#include <optional>
#include <vector>

#include "dualview/dereflect.hpp"
#include "dualview/parallel.hpp"

namespace dualview {

void forward_gradients(const Image& img, Image& gx, Image& gy) {
  const int w = img.width();
  const int h = img.height();
  gx = Image(w, h, img.channels());
  gy = Image(w, h, img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (x + 1 < w) gx.at(x, y, c) = img.at(x + 1, y, c) - img.at(x, y, c);
        if (y + 1 < h) gy.at(x, y, c) = img.at(x, y + 1, c) - img.at(x, y, c);
      }
    }
  }
}

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Orthonormal DCT-II basis; rows are frequencies.
Matrix dct_basis(int n) {
  Matrix m(n, n);
  for (int k = 0; k < n; ++k) {
    const double s = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (int i = 0; i < n; ++i) m(k, i) = s * std::cos(std::numbers::pi * (i + 0.5) * k / n);
  }
  return m;
}

// The Neumann path-graph Laplacian is diagonal in the DCT-II basis with
// eigenvalues 4 sin^2(pi k / 2n). With a uniform screening weight the whole
// operator is diagonal, so the preconditioner is its exact (pseudo-)inverse.
class DctPreconditioner {
 public:
  DctPreconditioner(int w, int h, double lambda) : w_(w), h_(h), cx_(dct_basis(w)), cy_(dct_basis(h)), inv_(h, w) {
    for (int ky = 0; ky < h; ++ky) {
      const double sy = std::sin(std::numbers::pi * ky / (2.0 * h));
      for (int kx = 0; kx < w; ++kx) {
        const double sx = std::sin(std::numbers::pi * kx / (2.0 * w));
        const double eig = 4.0 * sx * sx + 4.0 * sy * sy + lambda;
        inv_(ky, kx) = eig > 1e-12 ? 1.0 / eig : 0.0;
      }
    }
  }

  void apply(const std::vector<double>& r, std::vector<double>& z) const {
    Eigen::Map<const Matrix> in(r.data(), h_, w_);
    Matrix coeff = cy_ * in * cx_.transpose();
    coeff.array() *= inv_.array();
    Eigen::Map<Matrix> out(z.data(), h_, w_);
    out.noalias() = cy_.transpose() * coeff * cx_;
  }

 private:
  int w_, h_;
  Matrix cx_, cy_;
  Matrix inv_;
};

// A u = D^T D u + lambda u.
void apply_operator(const std::vector<double>& u, std::vector<double>& out, int w, int h, double lambda) {
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      double acc = lambda * u[i];
      if (x > 0) acc += u[i] - u[i - 1];
      if (x + 1 < w) acc += u[i] - u[i + 1];
      if (y > 0) acc += u[i] - u[i - w];
      if (y + 1 < h) acc += u[i] - u[i + w];
      out[i] = acc;
    }
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b, std::vector<double>& scratch) {
  for (std::size_t i = 0; i < a.size(); ++i) scratch[i] = a[i] * b[i];
  return pairwise_sum(scratch);
}

double mean_of(std::span<const float> values) {
  std::vector<double> d(values.begin(), values.end());
  return pairwise_sum(d) / static_cast<double>(d.size());
}

}  // namespace

PoissonResult poisson_reconstruct(const Image& gx, const Image& gy, const Image& anchor, double lambda,
                                  const PoissonOptions& options) {
  require_same_shape(gx, gy, "poisson_reconstruct: gradients");
  require_same_shape(gx, anchor, "poisson_reconstruct: anchor");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::kInvalidArgument, "poisson_reconstruct: lambda must be finite and >= 0");
  }
  const int w = gx.width();
  const int h = gx.height();
  const std::size_t n = gx.plane_size();

  PoissonResult result;
  result.image = Image(w, h, gx.channels());
  result.converged = true;
  if (n == 0) return result;

  std::optional<DctPreconditioner> pre;
  if (options.precondition) pre.emplace(w, h, lambda);

  std::vector<double> b(n), u(n), r(n), z(n), p(n), ap(n), scratch(n);
  for (int c = 0; c < gx.channels(); ++c) {
    // b = D^T g + lambda * anchor; D^T is the negative backward difference.
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        double acc = lambda * anchor.at(x, y, c);
        if (x + 1 < w) acc -= gx.at(x, y, c);
        if (x > 0) acc += gx.at(x - 1, y, c);
        if (y + 1 < h) acc -= gy.at(x, y, c);
        if (y > 0) acc += gy.at(x, y - 1, c);
        b[i] = acc;
      }
    }
    const double anchor_mean = mean_of(anchor.plane(c));
    // Start from the anchor when it enters the objective, from 0 otherwise
    // (the constant mode is set afterwards).
    for (std::size_t i = 0; i < n; ++i) u[i] = lambda > 0.0 ? anchor.plane(c)[i] : 0.0;

    const double b_norm = std::sqrt(dot(b, b, scratch));
    apply_operator(u, ap, w, h, lambda);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
    double r_norm = std::sqrt(dot(r, r, scratch));
    double rel = b_norm > 0.0 ? r_norm / b_norm : r_norm;
    int it = 0;
    if (rel >= options.tolerance) {
      if (pre) pre->apply(r, z); else z = r;
      p = z;
      double rz = dot(r, z, scratch);
      while (it < options.max_iterations) {
        apply_operator(p, ap, w, h, lambda);
        const double pap = dot(p, ap, scratch);
        if (!(pap > 0.0)) break;
        const double step = rz / pap;
        for (std::size_t i = 0; i < n; ++i) {
          u[i] += step * p[i];
          r[i] -= step * ap[i];
        }
        ++it;
        r_norm = std::sqrt(dot(r, r, scratch));
        rel = b_norm > 0.0 ? r_norm / b_norm : r_norm;
        if (rel < options.tolerance) break;
        if (pre) pre->apply(r, z); else z = r;
        const double rz_next = dot(r, z, scratch);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
      }
    }
    if (lambda == 0.0) {
      const double shift = anchor_mean - pairwise_sum(u) / static_cast<double>(n);
      for (double& v : u) v += shift;
    }
    auto out = result.image.plane(c);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(u[i]);
    result.iterations = std::max(result.iterations, it);
    result.residual = std::max(result.residual, rel);
    result.converged = result.converged && rel < options.tolerance;
  }
  return result;
}

}  // namespace dualview
