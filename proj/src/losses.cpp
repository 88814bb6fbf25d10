#include "rppg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rppg/ops.hpp"

namespace rppg {
namespace {

template <typename T>
void check_rows(const Var<T>& x, const char* what) {
  if (x.shape().size() != 2) throw ShapeError(std::string(what) + " must be [rows, D]");
}

void check_partner(const std::vector<std::size_t>& partner, std::size_t rows) {
  if (partner.size() != rows) throw std::invalid_argument("partner map size does not match batch");
  for (std::size_t m = 0; m < rows; ++m) {
    const std::size_t q = partner[m];
    if (q >= rows || q == m || partner[q] != m) {
      throw std::invalid_argument("partner map must be a fixed-point-free involution");
    }
  }
}

// Unit rows and norms of a [rows, D] matrix.
template <typename T>
std::vector<double> unit_rows(const Tensor<T>& x, std::vector<double>& norms) {
  const std::size_t rows = x.dim(0), d = x.dim(1);
  std::vector<double> u(rows * d);
  norms.assign(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += static_cast<double>(x.data[r * d + c]) * x.data[r * d + c];
    norms[r] = std::sqrt(s);
    if (!(norms[r] > 0.0)) throw std::invalid_argument("zero-norm vector in cosine similarity");
    for (std::size_t c = 0; c < d; ++c) u[r * d + c] = x.data[r * d + c] / norms[r];
  }
  return u;
}

// d/dz of a function of u = z/|z|, given its gradient g wrt u.
void unit_backward(const double* u, const double* g, double norm, std::size_t d, double* out) {
  double dot = 0.0;
  for (std::size_t c = 0; c < d; ++c) dot += u[c] * g[c];
  for (std::size_t c = 0; c < d; ++c) out[c] = (g[c] - u[c] * dot) / norm;
}

// Σ_m w * D(p_m, z_{q(m)}) with D = negative cosine; gradient only into p.
template <typename T>
Var<T> neg_cosine_sum(const Var<T>& p, const Tensor<T>& z, const std::vector<std::size_t>& partner,
                      double weight, std::vector<Var<T>> parents) {
  const std::size_t rows = p.dim(0), d = p.dim(1);
  std::vector<double> pn, zn;
  auto pu = unit_rows(p.value(), pn);
  auto zu = unit_rows(z, zn);
  double total = 0.0;
  for (std::size_t m = 0; m < rows; ++m) {
    const double* a = &pu[m * d];
    const double* b = &zu[partner[m] * d];
    double dot = 0.0;
    for (std::size_t c = 0; c < d; ++c) dot += a[c] * b[c];
    total -= weight * dot;
  }
  return make_result<T>(Tensor<T>({1}, {static_cast<T>(total)}), std::move(parents),
                        [pu, zu, pn, partner, weight, rows, d](Node<T>& self) {
    auto& pnode = *self.parents[0];
    if (!pnode.requires_grad) return;
    auto& gp = pnode.ensure_grad();
    const double s = self.grad.data[0];
    std::vector<double> g(d), out(d);
    for (std::size_t m = 0; m < rows; ++m) {
      for (std::size_t c = 0; c < d; ++c) g[c] = -weight * s * zu[partner[m] * d + c];
      unit_backward(&pu[m * d], g.data(), pn[m], d, out.data());
      for (std::size_t c = 0; c < d; ++c) gp.data[m * d + c] += static_cast<T>(out[c]);
    }
  });
}

}  // namespace

template <typename T>
T cosine_similarity(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) throw ShapeError("cosine_similarity length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (!(na > 0.0) || !(nb > 0.0)) throw std::invalid_argument("zero-norm vector in cosine similarity");
  return static_cast<T>(std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0));
}

std::vector<std::size_t> paired_halves(std::size_t two_n) {
  if (two_n % 2 != 0 || two_n == 0) throw std::invalid_argument("paired batch must have even size");
  const std::size_t n = two_n / 2;
  std::vector<std::size_t> partner(two_n);
  for (std::size_t m = 0; m < two_n; ++m) partner[m] = (m + n) % two_n;
  return partner;
}

template <typename T>
Var<T> ntxent_loss(const ContrastiveBatch<T>& batch) {
  check_rows(batch.z, "ntxent projections");
  const std::size_t rows = batch.z.dim(0), d = batch.z.dim(1);
  if (rows < 4) throw std::invalid_argument("ntxent_loss needs 2N >= 4 projections");
  if (!(batch.tau > T(0))) throw std::invalid_argument("ntxent temperature must be positive");
  check_partner(batch.partner, rows);
  const double tau = static_cast<double>(batch.tau);

  std::vector<double> norms;
  const auto u = unit_rows(batch.z.value(), norms);
  std::vector<double> sim(rows * rows, 0.0);
  for (std::size_t m = 0; m < rows; ++m)
    for (std::size_t k = m; k < rows; ++k) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += u[m * d + c] * u[k * d + c];
      sim[m * rows + k] = sim[k * rows + m] = s;
    }

  // soft[m,k] = softmax over k != m of sim/tau; loss_m = -l_pos + logsumexp.
  std::vector<double> soft(rows * rows, 0.0);
  double total = 0.0;
  for (std::size_t m = 0; m < rows; ++m) {
    double mx = -INFINITY;
    for (std::size_t k = 0; k < rows; ++k)
      if (k != m) mx = std::max(mx, sim[m * rows + k] / tau);
    double z = 0.0;
    for (std::size_t k = 0; k < rows; ++k)
      if (k != m) z += std::exp(sim[m * rows + k] / tau - mx);
    for (std::size_t k = 0; k < rows; ++k)
      if (k != m) soft[m * rows + k] = std::exp(sim[m * rows + k] / tau - mx) / z;
    total += -(sim[m * rows + batch.partner[m]] / tau) + mx + std::log(z);
  }
  const double inv_rows = 1.0 / static_cast<double>(rows);

  return make_result<T>(Tensor<T>({1}, {static_cast<T>(total * inv_rows)}), {batch.z},
                        [u, norms, soft, partner = batch.partner, rows, d, tau, inv_rows](Node<T>& self) {
    const double s = self.grad.data[0];
    // a[m,k] = dL/dsim[m,k] through anchor m.
    std::vector<double> a(rows * rows, 0.0);
    for (std::size_t m = 0; m < rows; ++m)
      for (std::size_t k = 0; k < rows; ++k) {
        if (k == m) continue;
        a[m * rows + k] = s * inv_rows * (soft[m * rows + k] - (k == partner[m] ? 1.0 : 0.0)) / tau;
      }
    auto& gz = self.parents[0]->ensure_grad();
    std::vector<double> gu(d), out(d);
    for (std::size_t m = 0; m < rows; ++m) {
      std::fill(gu.begin(), gu.end(), 0.0);
      for (std::size_t k = 0; k < rows; ++k) {
        if (k == m) continue;
        const double w = a[m * rows + k] + a[k * rows + m];
        for (std::size_t c = 0; c < d; ++c) gu[c] += w * u[k * d + c];
      }
      unit_backward(&u[m * d], gu.data(), norms[m], d, out.data());
      for (std::size_t c = 0; c < d; ++c) gz.data[m * d + c] += static_cast<T>(out[c]);
    }
  });
}

template <typename T>
Var<T> simsiam_loss(const Var<T>& p, const Var<T>& z, const std::vector<std::size_t>& partner) {
  check_rows(p, "simsiam predictions");
  check_rows(z, "simsiam projections");
  if (p.shape() != z.shape()) throw ShapeError("simsiam p and z shapes differ");
  check_partner(partner, p.dim(0));
  return neg_cosine_sum<T>(p, z.value(), partner, 1.0 / static_cast<double>(p.dim(0)), {p});
}

template <typename T>
Var<T> simsiam_loss(const Var<T>& p_m, const Var<T>& z_m, const Var<T>& p_n, const Var<T>& z_n) {
  for (const Var<T>* v : {&p_m, &z_m, &p_n, &z_n}) {
    if (v->shape().size() != 1 || v->shape() != p_m.shape()) {
      throw ShapeError("simsiam_loss vectors must share a rank-1 shape");
    }
  }
  const Shape row{1, p_m.dim(0)};
  const Var<T> pm = reshape(p_m, row), pn = reshape(p_n, row);
  // z arguments are never graph parents, which is the stop-gradient.
  Var<T> first = neg_cosine_sum<T>(pm, Tensor<T>(row, z_n.value().data), {0}, 0.5, {pm});
  Var<T> second = neg_cosine_sum<T>(pn, Tensor<T>(row, z_m.value().data), {0}, 0.5, {pn});
  return add(first, second);
}

template <typename T>
Var<T> smooth_l1(const Var<T>& pred, const Tensor<T>& target, T beta) {
  if (pred.shape() != target.shape) {
    throw ShapeError("smooth_l1 shape mismatch: " + to_string(pred.shape()) + " vs " +
                     to_string(target.shape));
  }
  if (!(beta > T(0))) throw std::invalid_argument("smooth_l1 beta must be positive");
  const std::size_t n = target.size();
  if (n == 0) throw ShapeError("smooth_l1 on empty signal");
  const double b = static_cast<double>(beta);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(pred.value().data[i]) - target.data[i];
    const double ad = std::abs(d);
    total += ad < b ? 0.5 * d * d / b : ad - 0.5 * b;
  }
  return make_result<T>(Tensor<T>({1}, {static_cast<T>(total / static_cast<double>(n))}), {pred},
                        [target, b, n](Node<T>& self) {
    auto& gp = self.parents[0]->ensure_grad();
    const double s = self.grad.data[0] / static_cast<double>(n);
    const auto& pv = self.parents[0]->value.data;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = static_cast<double>(pv[i]) - target.data[i];
      const double g = std::abs(d) < b ? d / b : (d > 0 ? 1.0 : -1.0);
      gp.data[i] += static_cast<T>(s * g);
    }
  });
}

VarF stage2_loss(const RppgOutputs& outputs, const TensorF& target, const Stage2LossConfig& cfg) {
  if (cfg.alpha < 0) throw std::invalid_argument("stage-2 alpha must be non-negative");
  const auto beta = static_cast<float>(cfg.beta);
  VarF total = smooth_l1(outputs.p_out, target, beta);
  if (cfg.taps.empty()) return total;
  VarF aux;
  for (int layer : cfg.taps) {
    auto it = outputs.taps.find(layer);
    if (it == outputs.taps.end()) {
      throw std::invalid_argument("stage2_loss: missing tap output for layer " + std::to_string(layer));
    }
    VarF term = smooth_l1(it->second, target, beta);
    aux = aux.defined() ? add(aux, term) : term;
  }
  return add(total, scale(aux, static_cast<float>(cfg.alpha)));
}

#define RPPG_INSTANTIATE_LOSSES(T)                                                             \
  template T cosine_similarity(std::span<const T>, std::span<const T>);                        \
  template Var<T> ntxent_loss(const ContrastiveBatch<T>&);                                     \
  template Var<T> simsiam_loss(const Var<T>&, const Var<T>&, const std::vector<std::size_t>&); \
  template Var<T> simsiam_loss(const Var<T>&, const Var<T>&, const Var<T>&, const Var<T>&);   \
  template Var<T> smooth_l1(const Var<T>&, const Tensor<T>&, T);

RPPG_INSTANTIATE_LOSSES(float)
RPPG_INSTANTIATE_LOSSES(double)

}  // namespace rppg
