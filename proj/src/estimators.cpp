#include "adacs/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "adacs/rng.hpp"

namespace adacs {

namespace {

constexpr double kLeakySlope = 0.1;

struct ConvLayout {
  int in_ch = 0, out_ch = 0, k = 0;
  size_t w_off = 0, b_off = 0;
};

struct NetLayout {
  std::vector<ConvLayout> enc;   // depth+1 levels, full resolution first
  std::vector<ConvLayout> dec;   // indexed by level, 0 = full resolution
  ConvLayout head;
  std::vector<ConvLayout> order;  // creation order == parameter layout order
  size_t total = 0;
};

int level_width(const EstimatorSpec& spec, int d) { return spec.base_width << d; }

NetLayout make_layout(const EstimatorSpec& spec) {
  NetLayout layout;
  size_t off = 0;
  auto add = [&](int ic, int oc, int k) {
    ConvLayout c;
    c.in_ch = ic;
    c.out_ch = oc;
    c.k = k;
    c.w_off = off;
    c.b_off = off + static_cast<size_t>(ic) * oc * k * k;
    off = c.b_off + oc;
    layout.order.push_back(c);
    return c;
  };
  layout.enc.push_back(add(spec.in_channels, level_width(spec, 0), 3));
  for (int d = 1; d <= spec.depth; ++d) {
    layout.enc.push_back(add(level_width(spec, d - 1), level_width(spec, d), 3));
  }
  layout.dec.resize(spec.depth);
  for (int d = spec.depth - 1; d >= 0; --d) {
    layout.dec[d] = add(level_width(spec, d + 1) + level_width(spec, d), level_width(spec, d), 3);
  }
  layout.head = add(level_width(spec, 0), spec.out_channels(), 1);
  layout.total = off;
  return layout;
}

// --- primitive layers ---------------------------------------------------

// Copies `in` into a per-channel (h+2)x(w+2) replicate-padded buffer.
void pad_replicate(const Tensor& in, std::vector<double>& padded) {
  const int h = in.h, w = in.w, ph = h + 2, pw = w + 2;
  padded.resize(static_cast<size_t>(in.ch) * ph * pw);
  for (int c = 0; c < in.ch; ++c) {
    const double* src = in.channel(c);
    double* dst = padded.data() + static_cast<size_t>(c) * ph * pw;
    for (int y = 0; y < ph; ++y) {
      const int sy = std::clamp(y - 1, 0, h - 1);
      const double* srow = src + static_cast<size_t>(sy) * w;
      double* drow = dst + static_cast<size_t>(y) * pw;
      drow[0] = srow[0];
      std::memcpy(drow + 1, srow, sizeof(double) * w);
      drow[pw - 1] = srow[w - 1];
    }
  }
}

void conv3_forward(const double* W, const double* B, const std::vector<double>& padded, int in_ch,
                   Tensor& out) {
  const int h = out.h, w = out.w, ph = h + 2, pw = w + 2;
  for (int oc = 0; oc < out.ch; ++oc) {
    double* o = out.channel(oc);
    std::fill(o, o + out.plane(), B[oc]);
    for (int ic = 0; ic < in_ch; ++ic) {
      const double* pc = padded.data() + static_cast<size_t>(ic) * ph * pw;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double wv = W[((static_cast<size_t>(oc) * in_ch + ic) * 3 + ky) * 3 + kx];
          for (int y = 0; y < h; ++y) {
            const double* prow = pc + static_cast<size_t>(y + ky) * pw + kx;
            double* orow = o + static_cast<size_t>(y) * w;
            for (int x = 0; x < w; ++x) orow[x] += wv * prow[x];
          }
        }
      }
    }
  }
}

void conv3_backward(const double* W, const std::vector<double>& padded_in, int in_ch,
                    const Tensor& d_out, double* dW, double* dB, Tensor* d_in) {
  const int h = d_out.h, w = d_out.w, ph = h + 2, pw = w + 2;
  for (int oc = 0; oc < d_out.ch; ++oc) {
    const double* g = d_out.channel(oc);
    double acc = 0.0;
    for (size_t i = 0; i < d_out.plane(); ++i) acc += g[i];
    dB[oc] += acc;
    for (int ic = 0; ic < in_ch; ++ic) {
      const double* pc = padded_in.data() + static_cast<size_t>(ic) * ph * pw;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          double wacc = 0.0;
          for (int y = 0; y < h; ++y) {
            const double* prow = pc + static_cast<size_t>(y + ky) * pw + kx;
            const double* grow = g + static_cast<size_t>(y) * w;
            for (int x = 0; x < w; ++x) wacc += grow[x] * prow[x];
          }
          dW[((static_cast<size_t>(oc) * in_ch + ic) * 3 + ky) * 3 + kx] += wacc;
        }
      }
    }
  }
  if (!d_in) return;
  std::vector<double> d_padded(static_cast<size_t>(in_ch) * ph * pw, 0.0);
  for (int oc = 0; oc < d_out.ch; ++oc) {
    const double* g = d_out.channel(oc);
    for (int ic = 0; ic < in_ch; ++ic) {
      double* pc = d_padded.data() + static_cast<size_t>(ic) * ph * pw;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double wv = W[((static_cast<size_t>(oc) * in_ch + ic) * 3 + ky) * 3 + kx];
          for (int y = 0; y < h; ++y) {
            double* prow = pc + static_cast<size_t>(y + ky) * pw + kx;
            const double* grow = g + static_cast<size_t>(y) * w;
            for (int x = 0; x < w; ++x) prow[x] += wv * grow[x];
          }
        }
      }
    }
  }
  // fold the replicate-padding borders back onto the edge pixels
  for (int c = 0; c < in_ch; ++c) {
    const double* pc = d_padded.data() + static_cast<size_t>(c) * ph * pw;
    double* dst = d_in->channel(c);
    for (int py = 0; py < ph; ++py) {
      const int sy = std::clamp(py - 1, 0, h - 1);
      const double* prow = pc + static_cast<size_t>(py) * pw;
      double* drow = dst + static_cast<size_t>(sy) * w;
      for (int px = 0; px < pw; ++px) {
        drow[std::clamp(px - 1, 0, w - 1)] += prow[px];
      }
    }
  }
}

void conv1_forward(const double* W, const double* B, const Tensor& in, Tensor& out) {
  for (int oc = 0; oc < out.ch; ++oc) {
    double* o = out.channel(oc);
    std::fill(o, o + out.plane(), B[oc]);
    for (int ic = 0; ic < in.ch; ++ic) {
      const double wv = W[static_cast<size_t>(oc) * in.ch + ic];
      const double* a = in.channel(ic);
      for (size_t i = 0; i < in.plane(); ++i) o[i] += wv * a[i];
    }
  }
}

void conv1_backward(const double* W, const Tensor& in, const Tensor& d_out, double* dW, double* dB,
                    Tensor* d_in) {
  for (int oc = 0; oc < d_out.ch; ++oc) {
    const double* g = d_out.channel(oc);
    double acc = 0.0;
    for (size_t i = 0; i < d_out.plane(); ++i) acc += g[i];
    dB[oc] += acc;
    for (int ic = 0; ic < in.ch; ++ic) {
      const double* a = in.channel(ic);
      double wacc = 0.0;
      for (size_t i = 0; i < in.plane(); ++i) wacc += g[i] * a[i];
      dW[static_cast<size_t>(oc) * in.ch + ic] += wacc;
      if (d_in) {
        double* di = d_in->channel(ic);
        const double wv = W[static_cast<size_t>(oc) * in.ch + ic];
        for (size_t i = 0; i < in.plane(); ++i) di[i] += wv * g[i];
      }
    }
  }
}

Tensor leaky_relu(const Tensor& z) {
  Tensor a(z.ch, z.h, z.w);
  for (size_t i = 0; i < z.v.size(); ++i) {
    a.v[i] = z.v[i] >= 0.0 ? z.v[i] : kLeakySlope * z.v[i];
  }
  return a;
}

void leaky_relu_backward(const Tensor& z, Tensor& grad) {
  for (size_t i = 0; i < z.v.size(); ++i) {
    if (z.v[i] < 0.0) grad.v[i] *= kLeakySlope;
  }
}

Tensor avgpool2(const Tensor& in) {
  Tensor out(in.ch, in.h / 2, in.w / 2);
  for (int c = 0; c < in.ch; ++c) {
    const double* a = in.channel(c);
    double* o = out.channel(c);
    for (int y = 0; y < out.h; ++y) {
      const double* r0 = a + static_cast<size_t>(2 * y) * in.w;
      const double* r1 = r0 + in.w;
      for (int x = 0; x < out.w; ++x) {
        o[static_cast<size_t>(y) * out.w + x] =
            0.25 * (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]);
      }
    }
  }
  return out;
}

void avgpool2_backward(const Tensor& d_out, Tensor& d_in) {
  for (int c = 0; c < d_out.ch; ++c) {
    const double* g = d_out.channel(c);
    double* di = d_in.channel(c);
    for (int y = 0; y < d_out.h; ++y) {
      double* r0 = di + static_cast<size_t>(2 * y) * d_in.w;
      double* r1 = r0 + d_in.w;
      for (int x = 0; x < d_out.w; ++x) {
        const double v = 0.25 * g[static_cast<size_t>(y) * d_out.w + x];
        r0[2 * x] += v;
        r0[2 * x + 1] += v;
        r1[2 * x] += v;
        r1[2 * x + 1] += v;
      }
    }
  }
}

Tensor upsample2(const Tensor& in) {
  Tensor out(in.ch, in.h * 2, in.w * 2);
  for (int c = 0; c < in.ch; ++c) {
    const double* a = in.channel(c);
    double* o = out.channel(c);
    for (int y = 0; y < out.h; ++y) {
      const double* srow = a + static_cast<size_t>(y / 2) * in.w;
      double* drow = o + static_cast<size_t>(y) * out.w;
      for (int x = 0; x < out.w; ++x) drow[x] = srow[x / 2];
    }
  }
  return out;
}

void upsample2_backward(const Tensor& d_out, Tensor& d_in) {
  for (int c = 0; c < d_out.ch; ++c) {
    const double* g = d_out.channel(c);
    double* di = d_in.channel(c);
    for (int y = 0; y < d_out.h; ++y) {
      const double* grow = g + static_cast<size_t>(y) * d_out.w;
      double* drow = di + static_cast<size_t>(y / 2) * d_in.w;
      for (int x = 0; x < d_out.w; ++x) drow[x / 2] += grow[x];
    }
  }
}

Tensor concat(const Tensor& a, const Tensor& b) {
  Tensor out(a.ch + b.ch, a.h, a.w);
  std::copy(a.v.begin(), a.v.end(), out.v.begin());
  std::copy(b.v.begin(), b.v.end(), out.v.begin() + a.v.size());
  return out;
}

// --- whole-net forward / backward ----------------------------------------

Tensor conv_net_forward(const ParamVector& params, const EstimatorSpec& spec, Tensor input,
                        ForwardCache* cache) {
  const NetLayout layout = make_layout(spec);
  const double* P = params.values.data();
  const int D = spec.depth;

  std::vector<Tensor> enc_in(D + 1), enc_z(D + 1), enc_a(D + 1);
  std::vector<double> padded;
  enc_in[0] = std::move(input);
  for (int d = 0; d <= D; ++d) {
    if (d > 0) enc_in[d] = avgpool2(enc_a[d - 1]);
    const ConvLayout& c = layout.enc[d];
    enc_z[d] = Tensor(c.out_ch, enc_in[d].h, enc_in[d].w);
    pad_replicate(enc_in[d], padded);
    conv3_forward(P + c.w_off, P + c.b_off, padded, c.in_ch, enc_z[d]);
    enc_a[d] = leaky_relu(enc_z[d]);
  }

  std::vector<Tensor> dec_in(D), dec_z(D), dec_a(D);
  const Tensor* above = &enc_a[D];
  for (int d = D - 1; d >= 0; --d) {
    dec_in[d] = concat(upsample2(*above), enc_a[d]);
    const ConvLayout& c = layout.dec[d];
    dec_z[d] = Tensor(c.out_ch, dec_in[d].h, dec_in[d].w);
    pad_replicate(dec_in[d], padded);
    conv3_forward(P + c.w_off, P + c.b_off, padded, c.in_ch, dec_z[d]);
    dec_a[d] = leaky_relu(dec_z[d]);
    above = &dec_a[d];
  }

  Tensor head(spec.out_channels(), dec_a[0].h, dec_a[0].w);
  conv1_forward(P + layout.head.w_off, P + layout.head.b_off, dec_a[0], head);
  if (spec.head == HeadKind::Score) {
    for (double& v : head.v) v = 1.0 / (1.0 + std::exp(-v));
  }

  if (cache) {
    cache->spec = spec;
    cache->params_version = params.version;
    cache->valid = true;
    cache->input = enc_in[0];
    cache->enc_in = std::move(enc_in);
    cache->enc_z = std::move(enc_z);
    cache->enc_a = std::move(enc_a);
    cache->dec_in = std::move(dec_in);
    cache->dec_z = std::move(dec_z);
    cache->dec_a = std::move(dec_a);
    cache->head_out = head;
  }
  return head;
}

void conv_net_backward(ParamVector& params, const EstimatorSpec& spec, const ForwardCache& cache,
                       const Tensor& output_adjoint) {
  const NetLayout layout = make_layout(spec);
  const double* P = params.values.data();
  double* G = params.grads.data();
  const int D = spec.depth;
  std::vector<double> padded;

  Tensor g_head = output_adjoint;
  if (spec.head == HeadKind::Score) {
    for (size_t i = 0; i < g_head.v.size(); ++i) {
      const double s = cache.head_out.v[i];
      g_head.v[i] *= s * (1.0 - s);
    }
  }
  Tensor g_cur(cache.dec_a[0].ch, cache.dec_a[0].h, cache.dec_a[0].w);
  conv1_backward(P + layout.head.w_off, cache.dec_a[0], g_head, G + layout.head.w_off,
                 G + layout.head.b_off, &g_cur);

  std::vector<Tensor> g_enc_a(D + 1);
  for (int d = 0; d <= D; ++d) {
    g_enc_a[d] = Tensor(cache.enc_a[d].ch, cache.enc_a[d].h, cache.enc_a[d].w);
  }

  // decoder chain, full resolution first; g_cur holds d(loss)/d(dec_a[d])
  for (int d = 0; d < D; ++d) {
    leaky_relu_backward(cache.dec_z[d], g_cur);
    const ConvLayout& c = layout.dec[d];
    Tensor g_in(cache.dec_in[d].ch, cache.dec_in[d].h, cache.dec_in[d].w);
    pad_replicate(cache.dec_in[d], padded);
    conv3_backward(P + c.w_off, padded, c.in_ch, g_cur, G + c.w_off, G + c.b_off, &g_in);

    const int up_ch = level_width(spec, d + 1);
    Tensor& skip = g_enc_a[d];
    for (int ch = 0; ch < skip.ch; ++ch) {
      const double* src = g_in.channel(up_ch + ch);
      double* dst = skip.channel(ch);
      for (size_t i = 0; i < skip.plane(); ++i) dst[i] += src[i];
    }
    Tensor g_up_part(up_ch, g_in.h, g_in.w);
    std::copy(g_in.v.begin(), g_in.v.begin() + g_up_part.v.size(), g_up_part.v.begin());
    if (d + 1 < D) {
      Tensor g_above(cache.dec_a[d + 1].ch, cache.dec_a[d + 1].h, cache.dec_a[d + 1].w);
      upsample2_backward(g_up_part, g_above);
      g_cur = std::move(g_above);
    } else {
      upsample2_backward(g_up_part, g_enc_a[D]);
    }
  }

  // encoder chain, bottleneck first
  for (int d = D; d >= 0; --d) {
    Tensor g_a = std::move(g_enc_a[d]);
    leaky_relu_backward(cache.enc_z[d], g_a);
    const ConvLayout& c = layout.enc[d];
    pad_replicate(cache.enc_in[d], padded);
    if (d > 0) {
      Tensor g_in(cache.enc_in[d].ch, cache.enc_in[d].h, cache.enc_in[d].w);
      conv3_backward(P + c.w_off, padded, c.in_ch, g_a, G + c.w_off, G + c.b_off, &g_in);
      avgpool2_backward(g_in, g_enc_a[d - 1]);
    } else {
      // no adjoint needed for the image inputs
      conv3_backward(P + c.w_off, padded, c.in_ch, g_a, G + c.w_off, G + c.b_off, nullptr);
    }
  }
}

Tensor stack_channels(const Image& a, const Image& b) {
  Tensor t(2, a.height, a.width);
  std::copy(a.data.begin(), a.data.end(), t.v.begin());
  std::copy(b.data.begin(), b.data.end(), t.v.begin() + a.size());
  return t;
}

void require_spec_image(const EstimatorSpec& spec, const Image& img, const char* what) {
  require_same_shape(spec.width, spec.height, img.width, img.height, what);
}

Tensor estimator_forward(const ParamVector& params, const EstimatorSpec& spec, Tensor input,
                         ForwardCache* cache) {
  if (params.values.size() != param_count(spec)) {
    throw std::invalid_argument("estimator forward: parameter count does not match spec");
  }
  if (spec.kind == EstimatorKind::DirectField) {
    Tensor out(spec.out_channels(), spec.height, spec.width);
    std::copy(params.values.begin(), params.values.end(), out.v.begin());
    if (spec.head == HeadKind::Score) {
      for (double& v : out.v) v = 1.0 / (1.0 + std::exp(-v));
    }
    if (cache) {
      cache->spec = spec;
      cache->params_version = params.version;
      cache->valid = true;
      cache->head_out = out;
    }
    return out;
  }
  return conv_net_forward(params, spec, std::move(input), cache);
}

}  // namespace

void validate_spec(const EstimatorSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0) {
    throw std::invalid_argument("EstimatorSpec: image dims must be positive");
  }
  if (spec.in_channels < 1) throw std::invalid_argument("EstimatorSpec: in_channels < 1");
  if (spec.kind == EstimatorKind::ConvNet) {
    if (spec.base_width < 1) throw std::invalid_argument("EstimatorSpec: base_width < 1");
    if (spec.depth < 1 || spec.depth > 8) {
      throw std::invalid_argument("EstimatorSpec: depth must be in [1, 8]");
    }
    const int m = 1 << spec.depth;
    if (spec.width % m != 0 || spec.height % m != 0) {
      throw std::invalid_argument("EstimatorSpec: image dims not divisible by 2^depth (" +
                                  std::to_string(spec.width) + "x" + std::to_string(spec.height) +
                                  ", depth " + std::to_string(spec.depth) + ")");
    }
  } else if (spec.head == HeadKind::LogVariance) {
    throw std::invalid_argument("EstimatorSpec: direct-field has no log-variance head");
  }
}

size_t param_count(const EstimatorSpec& spec) {
  if (spec.kind == EstimatorKind::DirectField) {
    return static_cast<size_t>(spec.width) * spec.height * spec.out_channels();
  }
  return make_layout(spec).total;
}

ParamVector init_params(const EstimatorSpec& spec, uint64_t seed) {
  validate_spec(spec);
  ParamVector p;
  p.values.assign(param_count(spec), 0.0);
  p.grads.assign(p.values.size(), 0.0);
  if (spec.kind == EstimatorKind::ConvNet) {
    Rng rng(seed);
    const NetLayout layout = make_layout(spec);
    for (const ConvLayout& c : layout.order) {
      const double bound = std::sqrt(1.0 / (static_cast<double>(c.k) * c.k * c.in_ch));
      const size_t n = static_cast<size_t>(c.in_ch) * c.out_ch * c.k * c.k;
      for (size_t i = 0; i < n; ++i) {
        p.values[c.w_off + i] = rng.uniform(-bound, bound);
      }
    }
  }
  return p;
}

DisplacementField forward_displacement(const ParamVector& params, const EstimatorSpec& spec,
                                       const Image& src, const Image& tgt, ForwardCache* cache) {
  validate_spec(spec);
  if (spec.head != HeadKind::Displacement) {
    throw std::invalid_argument("forward_displacement: spec head is not displacement");
  }
  require_same_shape(src, tgt, "forward_displacement");
  require_spec_image(spec, tgt, "forward_displacement");
  Tensor input;
  if (spec.kind == EstimatorKind::ConvNet) {
    if (spec.in_channels != 2) {
      throw std::invalid_argument("forward_displacement: expected 2 input channels");
    }
    input = stack_channels(tgt, src);
  }
  Tensor out = estimator_forward(params, spec, std::move(input), cache);
  DisplacementField f(spec.width, spec.height);
  std::copy(out.v.begin(), out.v.begin() + f.size(), f.dx.begin());
  std::copy(out.v.begin() + f.size(), out.v.end(), f.dy.begin());
  return f;
}

ScoreMap forward_score(const ParamVector& params, const EstimatorSpec& spec, const Image& tgt,
                       ForwardCache* cache) {
  validate_spec(spec);
  if (spec.head != HeadKind::Score) {
    throw std::invalid_argument("forward_score: spec head is not score");
  }
  require_spec_image(spec, tgt, "forward_score");
  Tensor input;
  if (spec.kind == EstimatorKind::ConvNet) {
    if (spec.in_channels != 1) {
      throw std::invalid_argument("forward_score: expected 1 input channel");
    }
    input = Tensor(1, tgt.height, tgt.width);
    std::copy(tgt.data.begin(), tgt.data.end(), input.v.begin());
  }
  Tensor out = estimator_forward(params, spec, std::move(input), cache);
  ScoreMap s;
  s.width = spec.width;
  s.height = spec.height;
  s.s = std::move(out.v);
  return s;
}

Tensor forward_logvar(const ParamVector& params, const EstimatorSpec& spec, const Image& tgt,
                      const Image& warped, ForwardCache* cache) {
  validate_spec(spec);
  if (spec.kind != EstimatorKind::ConvNet || spec.head != HeadKind::LogVariance ||
      spec.in_channels != 2) {
    throw std::invalid_argument("forward_logvar: needs a 2-channel conv-net log-variance spec");
  }
  require_same_shape(tgt, warped, "forward_logvar");
  require_spec_image(spec, tgt, "forward_logvar");
  return estimator_forward(params, spec, stack_channels(tgt, warped), cache);
}

void backward(ParamVector& params, const EstimatorSpec& spec, const ForwardCache& cache,
              const Tensor& output_adjoint) {
  if (!cache.valid || cache.params_version != params.version) {
    throw std::logic_error("backward: cache is stale (params changed since forward)");
  }
  if (cache.spec.kind != spec.kind || cache.spec.head != spec.head ||
      cache.spec.width != spec.width || cache.spec.height != spec.height ||
      cache.spec.depth != spec.depth || cache.spec.base_width != spec.base_width) {
    throw std::logic_error("backward: cache was produced by a different spec");
  }
  if (output_adjoint.ch != spec.out_channels() || output_adjoint.h != spec.height ||
      output_adjoint.w != spec.width) {
    throw std::invalid_argument("backward: adjoint shape mismatch");
  }
  if (spec.kind == EstimatorKind::DirectField) {
    if (spec.head == HeadKind::Score) {
      for (size_t i = 0; i < params.grads.size(); ++i) {
        const double s = cache.head_out.v[i];
        params.grads[i] += output_adjoint.v[i] * s * (1.0 - s);
      }
    } else {
      for (size_t i = 0; i < params.grads.size(); ++i) {
        params.grads[i] += output_adjoint.v[i];
      }
    }
    return;
  }
  conv_net_backward(params, spec, cache, output_adjoint);
}

OptimState make_optimizer(size_t n_params, double eta) {
  OptimState opt;
  opt.eta = eta;
  opt.m.assign(n_params, 0.0);
  opt.v.assign(n_params, 0.0);
  return opt;
}

void optimizer_step(ParamVector& params, OptimState& opt) {
  if (params.values.size() != opt.m.size()) {
    throw std::invalid_argument("optimizer_step: state size mismatch");
  }
  for (double g : params.grads) {
    if (!std::isfinite(g)) {
      throw std::runtime_error("optimizer_step: non-finite gradient");
    }
  }
  opt.step += 1;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  for (size_t i = 0; i < params.values.size(); ++i) {
    const double g = params.grads[i];
    opt.m[i] = opt.beta1 * opt.m[i] + (1.0 - opt.beta1) * g;
    opt.v[i] = opt.beta2 * opt.v[i] + (1.0 - opt.beta2) * g * g;
    const double mhat = opt.m[i] / c1;
    const double vhat = opt.v[i] / c2;
    params.values[i] -= opt.eta * mhat / (std::sqrt(vhat) + opt.eps);
  }
  params.zero_grads();
  params.version += 1;
}

}  // namespace adacs
