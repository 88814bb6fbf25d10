#include "rppg/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>

#include "rppg/rng.hpp"

namespace rppg {
namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapR = Eigen::Map<MatR<T>>;
template <typename T>
using CMapR = Eigen::Map<const MatR<T>>;

// out[c] += sum over rows of m[r, c], row by row. Eigen's vectorized column
// reductions pick their summation order from the buffer alignment, which breaks
// run-to-run reproducibility.
template <typename T>
void add_column_sums(const T* m, std::size_t rows, std::size_t cols, T* out) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c] += m[r * cols + c];
}

struct ConvGeom {
  std::size_t n, t, h, w, ci;
  std::size_t kt, kh, kw, co;
  std::size_t pt, ph, pw;
  std::size_t to, ho, wo;
  std::size_t k;  // kt*kh*kw*ci
  std::size_t positions() const { return to * ho * wo; }
};

ConvGeom conv_geometry(const Shape& x, const Shape& k, const Shape& b, Dims3 pad) {
  if (x.size() != 5) throw ShapeError("conv3d input must be [N,T,H,W,C], got " + to_string(x));
  if (k.size() != 5) throw ShapeError("conv3d kernel must be [kt,kh,kw,Cin,Cout], got " + to_string(k));
  if (k[3] != x[4]) {
    throw ShapeError("conv3d channel mismatch: input " + to_string(x) + " kernel " + to_string(k));
  }
  if (b.size() != 1 || b[0] != k[4]) throw ShapeError("conv3d bias must be [Cout]");
  ConvGeom g{x[0], x[1], x[2], x[3], x[4], k[0], k[1], k[2], k[4], pad[0], pad[1], pad[2],
             0, 0, 0, k[0] * k[1] * k[2] * k[3]};
  if (g.kt > g.t + 2 * g.pt || g.kh > g.h + 2 * g.ph || g.kw > g.w + 2 * g.pw) {
    throw ShapeError("conv3d kernel " + to_string(k) + " larger than padded input " + to_string(x));
  }
  g.to = g.t + 2 * g.pt - g.kt + 1;
  g.ho = g.h + 2 * g.ph - g.kh + 1;
  g.wo = g.w + 2 * g.pw - g.kw + 1;
  return g;
}

std::size_t chunk_rows(const ConvGeom& g) {
  const std::size_t budget = std::size_t{1} << 21;
  return std::clamp<std::size_t>(budget / g.k, 16, g.positions());
}

// Gathers the receptive fields of output positions [row0, row0+rows) of sample n.
template <typename T>
void im2col(const T* x, const ConvGeom& g, std::size_t n, std::size_t row0, std::size_t rows,
            T* col) {
  const std::size_t plane = g.ho * g.wo;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t pos = row0 + r;
    const long t0 = static_cast<long>(pos / plane) - static_cast<long>(g.pt);
    const long h0 = static_cast<long>((pos / g.wo) % g.ho) - static_cast<long>(g.ph);
    const long w0 = static_cast<long>(pos % g.wo) - static_cast<long>(g.pw);
    T* dst = col + r * g.k;
    for (std::size_t dt = 0; dt < g.kt; ++dt) {
      const long it = t0 + static_cast<long>(dt);
      if (it < 0 || it >= static_cast<long>(g.t)) {
        std::fill_n(dst, g.kh * g.kw * g.ci, T(0));
        dst += g.kh * g.kw * g.ci;
        continue;
      }
      for (std::size_t dh = 0; dh < g.kh; ++dh) {
        const long ih = h0 + static_cast<long>(dh);
        if (ih < 0 || ih >= static_cast<long>(g.h)) {
          std::fill_n(dst, g.kw * g.ci, T(0));
          dst += g.kw * g.ci;
          continue;
        }
        const T* row = x + (((n * g.t + it) * g.h + ih) * g.w) * g.ci;
        for (std::size_t dw = 0; dw < g.kw; ++dw) {
          const long iw = w0 + static_cast<long>(dw);
          if (iw < 0 || iw >= static_cast<long>(g.w)) {
            std::fill_n(dst, g.ci, T(0));
          } else {
            std::memcpy(dst, row + iw * g.ci, g.ci * sizeof(T));
          }
          dst += g.ci;
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds column gradients back onto the input gradient.
template <typename T>
void col2im_add(const T* col, const ConvGeom& g, std::size_t n, std::size_t row0,
                std::size_t rows, T* gx) {
  const std::size_t plane = g.ho * g.wo;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t pos = row0 + r;
    const long t0 = static_cast<long>(pos / plane) - static_cast<long>(g.pt);
    const long h0 = static_cast<long>((pos / g.wo) % g.ho) - static_cast<long>(g.ph);
    const long w0 = static_cast<long>(pos % g.wo) - static_cast<long>(g.pw);
    const T* src = col + r * g.k;
    for (std::size_t dt = 0; dt < g.kt; ++dt) {
      const long it = t0 + static_cast<long>(dt);
      if (it < 0 || it >= static_cast<long>(g.t)) {
        src += g.kh * g.kw * g.ci;
        continue;
      }
      for (std::size_t dh = 0; dh < g.kh; ++dh) {
        const long ih = h0 + static_cast<long>(dh);
        if (ih < 0 || ih >= static_cast<long>(g.h)) {
          src += g.kw * g.ci;
          continue;
        }
        T* row = gx + (((n * g.t + it) * g.h + ih) * g.w) * g.ci;
        for (std::size_t dw = 0; dw < g.kw; ++dw) {
          const long iw = w0 + static_cast<long>(dw);
          if (iw >= 0 && iw < static_cast<long>(g.w)) {
            T* dst = row + iw * g.ci;
            for (std::size_t c = 0; c < g.ci; ++c) dst[c] += src[c];
          }
          src += g.ci;
        }
      }
    }
  }
}

void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b) throw ShapeError(std::string(op) + ": shape " + to_string(a) + " vs " + to_string(b));
}

}  // namespace

template <typename T>
Var<T> conv3d(const Var<T>& input, const Var<T>& kernel, const Var<T>& bias, Dims3 padding) {
  const ConvGeom g = conv_geometry(input.shape(), kernel.shape(), bias.shape(), padding);
  Tensor<T> out({g.n, g.to, g.ho, g.wo, g.co});
  const std::size_t positions = g.positions();
  const std::size_t chunk = chunk_rows(g);
  std::vector<T> col(chunk * g.k);
  CMapR<T> kmat(kernel.value().data.data(), g.k, g.co);
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bvec(bias.value().data.data(), g.co);

  for (std::size_t n = 0; n < g.n; ++n) {
    for (std::size_t row0 = 0; row0 < positions; row0 += chunk) {
      const std::size_t rows = std::min(chunk, positions - row0);
      im2col(input.value().data.data(), g, n, row0, rows, col.data());
      CMapR<T> cm(col.data(), rows, g.k);
      MapR<T> om(out.data.data() + (n * positions + row0) * g.co, rows, g.co);
      om.noalias() = cm * kmat;
      om.rowwise() += bvec;
    }
  }
  require_finite(out, "conv3d output");

  return make_result<T>(std::move(out), {input, kernel, bias}, [g](Node<T>& self) {
    auto& x = *self.parents[0];
    auto& k = *self.parents[1];
    auto& b = *self.parents[2];
    const std::size_t positions = g.positions();
    const std::size_t chunk = chunk_rows(g);
    std::vector<T> col(chunk * g.k);
    std::vector<T> gcol(x.requires_grad ? chunk * g.k : 0);
    CMapR<T> kmat(k.value.data.data(), g.k, g.co);
    T* gx = x.requires_grad ? x.ensure_grad().data.data() : nullptr;
    T* gk = k.requires_grad ? k.ensure_grad().data.data() : nullptr;
    T* gb = b.requires_grad ? b.ensure_grad().data.data() : nullptr;

    for (std::size_t n = 0; n < g.n; ++n) {
      for (std::size_t row0 = 0; row0 < positions; row0 += chunk) {
        const std::size_t rows = std::min(chunk, positions - row0);
        CMapR<T> gout(self.grad.data.data() + (n * positions + row0) * g.co, rows, g.co);
        if (gb) add_column_sums(gout.data(), rows, g.co, gb);
        if (gk) {
          im2col(x.value.data.data(), g, n, row0, rows, col.data());
          CMapR<T> cm(col.data(), rows, g.k);
          MapR<T> gkm(gk, g.k, g.co);
          gkm.noalias() += cm.transpose() * gout;
        }
        if (gx) {
          MapR<T> gcm(gcol.data(), rows, g.k);
          gcm.noalias() = gout * kmat.transpose();
          col2im_add(gcol.data(), g, n, row0, rows, gx);
        }
      }
    }
  });
}

template <typename T>
Var<T> avg_pool3d(const Var<T>& input, Dims3 window) {
  const Shape& s = input.shape();
  if (s.size() != 5) throw ShapeError("avg_pool3d input must be [N,T,H,W,C]");
  if (window[0] == 0 || window[1] == 0 || window[2] == 0) throw ShapeError("avg_pool3d zero window");
  if (window[0] > s[1] || window[1] > s[2] || window[2] > s[3]) {
    throw ShapeError("avg_pool3d window larger than input " + to_string(s));
  }
  const std::size_t N = s[0], Ti = s[1], Hi = s[2], Wi = s[3], C = s[4];
  const std::size_t To = Ti / window[0], Ho = Hi / window[1], Wo = Wi / window[2];
  const T inv = T(1) / static_cast<T>(window[0] * window[1] * window[2]);
  Tensor<T> out({N, To, Ho, Wo, C});

  auto for_each_tap = [=](auto&& fn) {
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t t = 0; t < To; ++t)
        for (std::size_t h = 0; h < Ho; ++h)
          for (std::size_t w = 0; w < Wo; ++w) {
            const std::size_t o = (((n * To + t) * Ho + h) * Wo + w) * C;
            for (std::size_t dt = 0; dt < window[0]; ++dt)
              for (std::size_t dh = 0; dh < window[1]; ++dh)
                for (std::size_t dw = 0; dw < window[2]; ++dw) {
                  const std::size_t i =
                      (((n * Ti + t * window[0] + dt) * Hi + h * window[1] + dh) * Wi +
                       w * window[2] + dw) * C;
                  fn(i, o);
                }
          }
  };

  const T* x = input.value().data.data();
  T* y = out.data.data();
  for_each_tap([&](std::size_t i, std::size_t o) {
    for (std::size_t c = 0; c < C; ++c) y[o + c] += x[i + c];
  });
  for (auto& v : out.data) v *= inv;

  return make_result<T>(std::move(out), {input}, [for_each_tap, inv, C](Node<T>& self) {
    T* gx = self.parents[0]->ensure_grad().data.data();
    const T* gy = self.grad.data.data();
    for_each_tap([&](std::size_t i, std::size_t o) {
      for (std::size_t c = 0; c < C; ++c) gx[i + c] += gy[o + c] * inv;
    });
  });
}

template <typename T>
Var<T> batch_norm(const Var<T>& input, const Var<T>& gamma, const Var<T>& beta,
                  Tensor<T>& running_mean, Tensor<T>& running_var, BnMode mode,
                  BatchNormOptions options) {
  const Shape& s = input.shape();
  if (s.empty()) throw ShapeError("batch_norm on rank-0 input");
  const std::size_t C = s.back();
  const std::size_t R = C ? input.value().size() / C : 0;
  if (R == 0 || C == 0) throw ShapeError("batch_norm on zero-size batch");
  for (const Shape* p : std::initializer_list<const Shape*>{&gamma.shape(), &beta.shape(), &running_mean.shape, &running_var.shape}) {
    if (p->size() != 1 || (*p)[0] != C) {
      throw ShapeError("batch_norm parameter shape " + to_string(*p) + " vs channels " +
                       std::to_string(C));
    }
  }

  const T* x = input.value().data.data();
  std::vector<T> mean(C), inv_std(C);
  if (mode == BnMode::Train) {
    std::vector<double> acc(C, 0.0), acc2(C, 0.0);
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < C; ++c) acc[c] += x[r * C + c];
    for (std::size_t c = 0; c < C; ++c) acc[c] /= static_cast<double>(R);
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < C; ++c) {
        const double d = x[r * C + c] - acc[c];
        acc2[c] += d * d;
      }
    const double m = options.momentum;
    for (std::size_t c = 0; c < C; ++c) {
      const double var = acc2[c] / static_cast<double>(R);
      mean[c] = static_cast<T>(acc[c]);
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(var + options.eps));
      const double unbiased = R > 1 ? acc2[c] / static_cast<double>(R - 1) : var;
      running_mean.data[c] = static_cast<T>((1.0 - m) * running_mean.data[c] + m * acc[c]);
      running_var.data[c] = static_cast<T>((1.0 - m) * running_var.data[c] + m * unbiased);
    }
  } else {
    for (std::size_t c = 0; c < C; ++c) {
      mean[c] = running_mean.data[c];
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var.data[c]) + options.eps));
    }
  }

  auto xhat = std::make_shared<Tensor<T>>(s);
  Tensor<T> out(s);
  const T* g = gamma.value().data.data();
  const T* b = beta.value().data.data();
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t i = r * C + c;
      const T xh = (x[i] - mean[c]) * inv_std[c];
      xhat->data[i] = xh;
      out.data[i] = g[c] * xh + b[c];
    }
  require_finite(out, "batch_norm output");

  return make_result<T>(std::move(out), {input, gamma, beta},
                        [xhat, inv_std, R, C, mode](Node<T>& self) {
    auto& xn = *self.parents[0];
    auto& gn = *self.parents[1];
    auto& bn = *self.parents[2];
    const T* gy = self.grad.data.data();
    const T* xh = xhat->data.data();
    std::vector<double> sum_dy(C, 0.0), sum_dy_xh(C, 0.0);
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < C; ++c) {
        sum_dy[c] += gy[r * C + c];
        sum_dy_xh[c] += static_cast<double>(gy[r * C + c]) * xh[r * C + c];
      }
    if (gn.requires_grad) {
      auto& gg = gn.ensure_grad();
      for (std::size_t c = 0; c < C; ++c) gg.data[c] += static_cast<T>(sum_dy_xh[c]);
    }
    if (bn.requires_grad) {
      auto& gb = bn.ensure_grad();
      for (std::size_t c = 0; c < C; ++c) gb.data[c] += static_cast<T>(sum_dy[c]);
    }
    if (xn.requires_grad) {
      T* gx = xn.ensure_grad().data.data();
      const T* gamma_v = gn.value.data.data();
      if (mode == BnMode::Train) {
        const T invR = T(1) / static_cast<T>(R);
        for (std::size_t r = 0; r < R; ++r)
          for (std::size_t c = 0; c < C; ++c) {
            const std::size_t i = r * C + c;
            gx[i] += gamma_v[c] * inv_std[c] *
                     (gy[i] - static_cast<T>(sum_dy[c]) * invR -
                      xh[i] * static_cast<T>(sum_dy_xh[c]) * invR);
          }
      } else {
        for (std::size_t r = 0; r < R; ++r)
          for (std::size_t c = 0; c < C; ++c) gx[r * C + c] += gamma_v[c] * inv_std[c] * gy[r * C + c];
      }
    }
  });
}

template <typename T>
Var<T> relu(const Var<T>& input) {
  Tensor<T> out(input.shape());
  const auto& x = input.value().data;
  for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = x[i] > T(0) ? x[i] : T(0);
  require_finite(out, "relu output");
  return make_result<T>(std::move(out), {input}, [](Node<T>& self) {
    auto& xn = *self.parents[0];
    T* gx = xn.ensure_grad().data.data();
    const T* xv = xn.value.data.data();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (xv[i] > T(0)) gx[i] += self.grad.data[i];
  });
}

template <typename T>
Var<T> dense_per_step(const Var<T>& input, const Var<T>& weight, const Var<T>& bias) {
  const Shape& s = input.shape();
  const Shape& ws = weight.shape();
  if (s.empty() || ws.size() != 2 || s.back() != ws[0]) {
    throw ShapeError("dense_per_step: input " + to_string(s) + " weight " + to_string(ws));
  }
  if (bias.shape().size() != 1 || bias.shape()[0] != ws[1]) {
    throw ShapeError("dense_per_step: bias must be [Cout]");
  }
  const std::size_t cin = ws[0], cout = ws[1], rows = input.value().size() / cin;
  Shape os = s;
  os.back() = cout;
  Tensor<T> out(os);
  CMapR<T> xm(input.value().data.data(), rows, cin);
  CMapR<T> wm(weight.value().data.data(), cin, cout);
  MapR<T> om(out.data.data(), rows, cout);
  om.noalias() = xm * wm;
  om.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias.value().data.data(), cout);
  require_finite(out, "dense_per_step output");

  return make_result<T>(std::move(out), {input, weight, bias}, [rows, cin, cout](Node<T>& self) {
    auto& xn = *self.parents[0];
    auto& wn = *self.parents[1];
    auto& bn = *self.parents[2];
    CMapR<T> gy(self.grad.data.data(), rows, cout);
    if (xn.requires_grad) {
      MapR<T> gx(xn.ensure_grad().data.data(), rows, cin);
      gx.noalias() += gy * CMapR<T>(wn.value.data.data(), cin, cout).transpose();
    }
    if (wn.requires_grad) {
      MapR<T> gw(wn.ensure_grad().data.data(), cin, cout);
      gw.noalias() += CMapR<T>(xn.value.data.data(), rows, cin).transpose() * gy;
    }
    if (bn.requires_grad) add_column_sums(gy.data(), rows, cout, bn.ensure_grad().data.data());
  });
}

template <typename T>
Var<T> global_spatial_avg(const Var<T>& input) {
  const Shape& s = input.shape();
  if (s.size() != 5) throw ShapeError("global_spatial_avg input must be [N,T,H,W,C]");
  const std::size_t NT = s[0] * s[1], HW = s[2] * s[3], C = s[4];
  if (HW == 0) throw ShapeError("global_spatial_avg on empty plane");
  const T inv = T(1) / static_cast<T>(HW);
  Tensor<T> out({s[0], s[1], C});
  const T* x = input.value().data.data();
  for (std::size_t i = 0; i < NT; ++i)
    for (std::size_t p = 0; p < HW; ++p)
      for (std::size_t c = 0; c < C; ++c) out.data[i * C + c] += x[(i * HW + p) * C + c];
  for (auto& v : out.data) v *= inv;
  return make_result<T>(std::move(out), {input}, [NT, HW, C, inv](Node<T>& self) {
    T* gx = self.parents[0]->ensure_grad().data.data();
    const T* gy = self.grad.data.data();
    for (std::size_t i = 0; i < NT; ++i)
      for (std::size_t p = 0; p < HW; ++p)
        for (std::size_t c = 0; c < C; ++c) gx[(i * HW + p) * C + c] += gy[i * C + c] * inv;
  });
}

template <typename T>
Var<T> temporal_mean(const Var<T>& input) {
  const Shape& s = input.shape();
  if (s.size() != 3 || s[1] == 0) throw ShapeError("temporal_mean input must be [N,T,C], T>0");
  const std::size_t N = s[0], Tn = s[1], C = s[2];
  const T inv = T(1) / static_cast<T>(Tn);
  Tensor<T> out({N, C});
  const T* x = input.value().data.data();
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t t = 0; t < Tn; ++t)
      for (std::size_t c = 0; c < C; ++c) out.data[n * C + c] += x[(n * Tn + t) * C + c];
  for (auto& v : out.data) v *= inv;
  return make_result<T>(std::move(out), {input}, [N, Tn, C, inv](Node<T>& self) {
    T* gx = self.parents[0]->ensure_grad().data.data();
    const T* gy = self.grad.data.data();
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t t = 0; t < Tn; ++t)
        for (std::size_t c = 0; c < C; ++c) gx[(n * Tn + t) * C + c] += gy[n * C + c] * inv;
  });
}

template <typename T>
Var<T> reshape(const Var<T>& input, Shape shape) {
  if (numel(shape) != input.value().size()) {
    throw ShapeError("reshape " + to_string(input.shape()) + " -> " + to_string(shape));
  }
  Tensor<T> out(std::move(shape), input.value().data);
  return make_result<T>(std::move(out), {input}, [](Node<T>& self) {
    auto& gx = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx.data[i] += self.grad.data[i];
  });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = a.value().data[i] + b.value().data[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      auto& g = p->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g.data[i] += self.grad.data[i];
    }
  });
}

template <typename T>
Var<T> scale(const Var<T>& a, T factor) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = a.value().data[i] * factor;
  return make_result<T>(std::move(out), {a}, [factor](Node<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g.data[i] += self.grad.data[i] * factor;
  });
}

template <typename T>
Var<T> sum(const Var<T>& a) {
  double acc = 0.0;
  for (T v : a.value().data) acc += v;
  return make_result<T>(Tensor<T>({1}, {static_cast<T>(acc)}), {a}, [](Node<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    const T s = self.grad.data[0];
    for (auto& v : g.data) v += s;
  });
}

double finite_diff_check(const DiffFn& fn, const std::vector<TensorD>& inputs,
                         FiniteDiffOptions options) {
  Rng rng(options.seed);
  std::vector<VarD> vars;
  vars.reserve(inputs.size());
  for (const auto& t : inputs) vars.emplace_back(t, true);
  VarD out = fn(vars);
  TensorD weights(out.shape());
  for (auto& w : weights.data) w = rng.normal();
  out.backward(weights);

  auto probe = [&](std::size_t which, std::size_t coord, double delta) {
    std::vector<VarD> shifted;
    shifted.reserve(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      TensorD t = inputs[i];
      if (i == which) t.data[coord] += delta;
      shifted.emplace_back(std::move(t), false);
    }
    const VarD y = fn(shifted);
    double acc = 0.0;
    for (std::size_t j = 0; j < y.value().size(); ++j) acc += weights.data[j] * y.value().data[j];
    return acc;
  };

  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::size_t n = inputs[i].size();
    std::vector<std::size_t> coords;
    if (options.samples_per_input == 0 || options.samples_per_input >= n) {
      coords.resize(n);
      for (std::size_t c = 0; c < n; ++c) coords[c] = c;
    } else {
      for (std::size_t s = 0; s < options.samples_per_input; ++s) coords.push_back(rng.uniform_index(n));
    }
    for (std::size_t c : coords) {
      const double analytic = vars[i].has_grad() ? vars[i].grad().data[c] : 0.0;
      const double numeric =
          (probe(i, c, options.epsilon) - probe(i, c, -options.epsilon)) / (2.0 * options.epsilon);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), options.floor});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

#define RPPG_INSTANTIATE_OPS(T)                                                             \
  template Var<T> conv3d(const Var<T>&, const Var<T>&, const Var<T>&, Dims3);               \
  template Var<T> avg_pool3d(const Var<T>&, Dims3);                                          \
  template Var<T> batch_norm(const Var<T>&, const Var<T>&, const Var<T>&, Tensor<T>&,        \
                             Tensor<T>&, BnMode, BatchNormOptions);                          \
  template Var<T> relu(const Var<T>&);                                                       \
  template Var<T> dense_per_step(const Var<T>&, const Var<T>&, const Var<T>&);               \
  template Var<T> global_spatial_avg(const Var<T>&);                                         \
  template Var<T> temporal_mean(const Var<T>&);                                              \
  template Var<T> reshape(const Var<T>&, Shape);                                             \
  template Var<T> add(const Var<T>&, const Var<T>&);                                         \
  template Var<T> scale(const Var<T>&, T);                                                   \
  template Var<T> sum(const Var<T>&);

RPPG_INSTANTIATE_OPS(float)
RPPG_INSTANTIATE_OPS(double)

}  // namespace rppg
