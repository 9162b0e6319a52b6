#include "omra/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

#include "omra/binio.hpp"
#include "omra/error.hpp"
#include "omra/random.hpp"
#include "omra/search.hpp"

namespace omra {

Tensor::Tensor(int c, int h, int w, double fill)
    : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

namespace {

void reshape(Tensor& t, int c, int h, int w) {
  t.channels = c;
  t.height = h;
  t.width = w;
  t.data.assign(static_cast<std::size_t>(c) * h * w, 0.0);
}

Frame reduce_to_fit(const Frame& f, int size) {
  Frame cur = f;
  while (cur.width() / 2 >= size && cur.height() / 2 >= size && cur.width() % 2 == 0 && cur.height() % 2 == 0)
    cur = downsample_frame(cur, 2);
  return cur;
}

// Cell-centre aligned bilinear resize of one plane into channel `c` of `out`.
void resize_into(const Frame& f, Tensor& out, int c) {
  const int size = out.width;
  const double sx = static_cast<double>(f.width()) / size;
  const double sy = static_cast<double>(f.height()) / size;
  for (int y = 0; y < size; ++y) {
    double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(f.height() - 1));
    int y0 = static_cast<int>(fy);
    int y1 = std::min(y0 + 1, f.height() - 1);
    double wy = fy - y0;
    for (int x = 0; x < size; ++x) {
      double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(f.width() - 1));
      int x0 = static_cast<int>(fx);
      int x1 = std::min(x0 + 1, f.width() - 1);
      double wx = fx - x0;
      double top = f.at(x0, y0) * (1 - wx) + f.at(x1, y0) * wx;
      double bot = f.at(x0, y1) * (1 - wx) + f.at(x1, y1) * wx;
      out.at(c, y, x) = (top * (1 - wy) + bot * wy) / 255.0 - 0.5;
    }
  }
}

void pad_into(const Tensor& src, Tensor& dst) {
  reshape(dst, src.channels, src.height + 2, src.width + 2);
  for (int c = 0; c < src.channels; ++c)
    for (int y = 0; y < src.height; ++y)
      std::copy_n(&src.data[(static_cast<std::size_t>(c) * src.height + y) * src.width], src.width,
                  &dst.at(c, y + 1, 1));
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

Tensor preprocess(const Frame& cur, const Frame& ref_past, const Frame& ref_future, int size) {
  if (cur.width() != ref_past.width() || cur.height() != ref_past.height() || cur.width() != ref_future.width() ||
      cur.height() != ref_future.height())
    throw DataError("preprocess: frame dimensions differ");
  if (size < 1) throw DataError("preprocess: bad target size");
  Tensor out(3, size, size);
  const Frame* order[3] = {&ref_past, &cur, &ref_future};
  for (int c = 0; c < 3; ++c) resize_into(reduce_to_fit(*order[c], size), out, c);
  return out;
}

ComplexityLedger preprocess_macs(int width, int height, int size) {
  ComplexityLedger l;
  int w = width, h = height;
  while (w / 2 >= size && h / 2 >= size && w % 2 == 0 && h % 2 == 0) {
    w /= 2;
    h /= 2;
    l.add({MacKind::BoxDownsample, 3ULL * w * h});
  }
  if (w != size || h != size) l.add({MacKind::FlowResample, 3ULL * size * size});
  return l;
}

TinyCnn::TinyCnn(const CnnShape& shape) : shape_(shape) {
  if (shape.in_channels < 1 || shape.input_size < 1 || shape.outputs < 1) throw DataError("bad network shape");
  for (int w : shape.widths)
    if (w < 1) throw DataError("bad network width");
  params_.assign(head_offset() + static_cast<std::size_t>(shape.outputs) * (shape.widths[2] + 1), 0.0);
}

std::size_t TinyCnn::conv_weight_offset(int layer) const {
  std::size_t off = 0;
  int cin = shape_.in_channels;
  for (int l = 0; l < layer; ++l) {
    off += static_cast<std::size_t>(shape_.widths[l]) * (cin * 9 + 1);
    cin = shape_.widths[l];
  }
  return off;
}

std::size_t TinyCnn::conv_bias_offset(int layer) const {
  int cin = layer == 0 ? shape_.in_channels : shape_.widths[layer - 1];
  return conv_weight_offset(layer) + static_cast<std::size_t>(shape_.widths[layer]) * cin * 9;
}

std::size_t TinyCnn::head_offset() const { return conv_weight_offset(3); }

int TinyCnn::conv_output_size(int layer) const {
  int s = shape_.input_size;
  for (int l = 0; l <= layer; ++l) s = (s - 1) / 2 + 1;
  return s;
}

TinyCnn TinyCnn::initialized(const CnnShape& shape, std::uint64_t seed) {
  TinyCnn net(shape);
  std::mt19937_64 rng(seed);
  auto fill = [&](std::size_t off, std::size_t n, int fan_in) {
    const double bound = std::sqrt(6.0 / fan_in);
    for (std::size_t i = 0; i < n; ++i) net.params_[off + i] = (2.0 * unit_uniform(rng) - 1.0) * bound;
  };
  int cin = shape.in_channels;
  for (int l = 0; l < 3; ++l) {
    fill(net.conv_weight_offset(l), static_cast<std::size_t>(shape.widths[l]) * cin * 9, cin * 9);
    cin = shape.widths[l];
  }
  fill(net.head_offset(), static_cast<std::size_t>(shape.outputs) * cin, cin);
  return net;
}

std::vector<double> TinyCnn::forward(const Tensor& input) const {
  Cache cache;
  return forward(input, cache);
}

std::vector<double> TinyCnn::forward(const Tensor& input, Cache& cache) const {
  if (params_.empty()) throw DataError("uninitialized network");
  if (input.channels != shape_.in_channels || input.height != shape_.input_size ||
      input.width != shape_.input_size)
    throw DataError("network input shape mismatch");

  const Tensor* src = &input;
  int cin = shape_.in_channels;
  for (int l = 0; l < 3; ++l) {
    const int cout = shape_.widths[l];
    Tensor& pin = cache.padded_in[l];
    pad_into(*src, pin);
    const int hout = (src->height - 1) / 2 + 1;
    const int wout = (src->width - 1) / 2 + 1;
    Tensor& act = cache.activation[l];
    reshape(act, cout, hout, wout);
    const double* w = &params_[conv_weight_offset(l)];
    const double* b = &params_[conv_bias_offset(l)];
    for (int co = 0; co < cout; ++co) {
      double* plane = &act.data[static_cast<std::size_t>(co) * hout * wout];
      std::fill_n(plane, hout * wout, b[co]);
      for (int ci = 0; ci < cin; ++ci) {
        for (int ky = 0; ky < 3; ++ky) {
          for (int kx = 0; kx < 3; ++kx) {
            const double wv = w[((static_cast<std::size_t>(co) * cin + ci) * 3 + ky) * 3 + kx];
            for (int oy = 0; oy < hout; ++oy) {
              const double* prow = &pin.at(ci, 2 * oy + ky, kx);
              double* orow = plane + static_cast<std::size_t>(oy) * wout;
              for (int ox = 0; ox < wout; ++ox) orow[ox] += wv * prow[2 * ox];
            }
          }
        }
      }
      for (int i = 0; i < hout * wout; ++i) plane[i] = std::max(plane[i], 0.0);
    }
    src = &act;
    cin = cout;
  }

  const Tensor& last = cache.activation[2];
  const int area = last.height * last.width;
  cache.pooled.assign(cin, 0.0);
  for (int c = 0; c < cin; ++c) {
    const double* plane = &last.data[static_cast<std::size_t>(c) * area];
    cache.pooled[c] = std::accumulate(plane, plane + area, 0.0) / area;
  }
  const double* hw = &params_[head_offset()];
  const double* hb = hw + static_cast<std::size_t>(shape_.outputs) * cin;
  cache.logits.assign(shape_.outputs, 0.0);
  for (int o = 0; o < shape_.outputs; ++o) {
    double z = hb[o];
    for (int c = 0; c < cin; ++c) z += hw[static_cast<std::size_t>(o) * cin + c] * cache.pooled[c];
    cache.logits[o] = z;
  }
  if (!all_finite(cache.logits)) throw DivergenceError("non-finite activation", 0);
  return cache.logits;
}

void TinyCnn::backward(const Cache& cache, std::span<const double> dlogits, std::vector<double>& grad) const {
  if (dlogits.size() != static_cast<std::size_t>(shape_.outputs)) throw DataError("gradient shape mismatch");
  if (grad.size() != params_.size()) grad.assign(params_.size(), 0.0);

  const int c3 = shape_.widths[2];
  const double* hw = &params_[head_offset()];
  double* ghw = &grad[head_offset()];
  double* ghb = ghw + static_cast<std::size_t>(shape_.outputs) * c3;
  std::vector<double> dpooled(c3, 0.0);
  for (int o = 0; o < shape_.outputs; ++o) {
    ghb[o] += dlogits[o];
    for (int c = 0; c < c3; ++c) {
      ghw[static_cast<std::size_t>(o) * c3 + c] += dlogits[o] * cache.pooled[c];
      dpooled[c] += dlogits[o] * hw[static_cast<std::size_t>(o) * c3 + c];
    }
  }

  const Tensor& last = cache.activation[2];
  Tensor dact(last.channels, last.height, last.width);
  const int area = last.height * last.width;
  for (int c = 0; c < c3; ++c)
    std::fill_n(&dact.data[static_cast<std::size_t>(c) * area], area, dpooled[c] / area);

  Tensor dpin;
  for (int l = 2; l >= 0; --l) {
    const Tensor& act = cache.activation[l];
    const Tensor& pin = cache.padded_in[l];
    const int cout = act.channels;
    const int cin = pin.channels;
    const int hout = act.height;
    const int wout = act.width;
    // ReLU mask.
    for (std::size_t i = 0; i < dact.data.size(); ++i)
      if (act.data[i] <= 0.0) dact.data[i] = 0.0;

    const bool need_input = l > 0;
    if (need_input) reshape(dpin, cin, pin.height, pin.width);
    const double* w = &params_[conv_weight_offset(l)];
    double* gw = &grad[conv_weight_offset(l)];
    double* gb = &grad[conv_bias_offset(l)];
    for (int co = 0; co < cout; ++co) {
      const double* dplane = &dact.data[static_cast<std::size_t>(co) * hout * wout];
      gb[co] += std::accumulate(dplane, dplane + hout * wout, 0.0);
      for (int ci = 0; ci < cin; ++ci) {
        for (int ky = 0; ky < 3; ++ky) {
          for (int kx = 0; kx < 3; ++kx) {
            const std::size_t wi = ((static_cast<std::size_t>(co) * cin + ci) * 3 + ky) * 3 + kx;
            const double wv = w[wi];
            double acc = 0.0;
            for (int oy = 0; oy < hout; ++oy) {
              const double* prow = &pin.at(ci, 2 * oy + ky, kx);
              const double* drow = dplane + static_cast<std::size_t>(oy) * wout;
              for (int ox = 0; ox < wout; ++ox) acc += drow[ox] * prow[2 * ox];
              if (need_input) {
                double* irow = &dpin.at(ci, 2 * oy + ky, kx);
                for (int ox = 0; ox < wout; ++ox) irow[2 * ox] += wv * drow[ox];
              }
            }
            gw[wi] += acc;
          }
        }
      }
    }
    if (need_input) {
      const Tensor& prev = cache.activation[l - 1];
      reshape(dact, prev.channels, prev.height, prev.width);
      for (int c = 0; c < prev.channels; ++c)
        for (int y = 0; y < prev.height; ++y)
          std::copy_n(&dpin.at(c, y + 1, 1), prev.width,
                      &dact.data[(static_cast<std::size_t>(c) * prev.height + y) * prev.width]);
    }
  }
}

std::uint64_t TinyCnn::forward_macs() const {
  std::uint64_t total = 0;
  std::uint64_t cin = shape_.in_channels;
  for (int l = 0; l < 3; ++l) {
    const std::uint64_t out = static_cast<std::uint64_t>(conv_output_size(l));
    total += 9 * cin * shape_.widths[l] * out * out;
    cin = shape_.widths[l];
  }
  return total + cin * shape_.outputs;
}

std::string_view mode_name(ClassifierMode m) { return m == ClassifierMode::Bi ? "bi" : "mu"; }

ClassifierMode parse_mode(std::string_view name) {
  if (name == "bi") return ClassifierMode::Bi;
  if (name == "mu") return ClassifierMode::Mu;
  throw UsageError("unknown classifier mode '" + std::string(name) + "'");
}

namespace {

void put_tensor(std::ostream& out, std::span<const int> dims, const double* data) {
  binio::put<std::uint8_t>(out, static_cast<std::uint8_t>(dims.size()));
  std::size_t n = 1;
  for (int d : dims) {
    binio::put<std::int32_t>(out, d);
    n *= static_cast<std::size_t>(d);
  }
  for (std::size_t i = 0; i < n; ++i) binio::put<float>(out, static_cast<float>(data[i]));
}

void get_tensor(std::istream& in, std::span<const int> dims, double* data) {
  const int rank = binio::get<std::uint8_t>(in);
  if (rank != static_cast<int>(dims.size())) throw DataError("model tensor rank mismatch");
  std::size_t n = 1;
  for (int d : dims) {
    if (binio::get<std::int32_t>(in) != d) throw DataError("model tensor shape mismatch");
    n *= static_cast<std::size_t>(d);
  }
  for (std::size_t i = 0; i < n; ++i) {
    data[i] = binio::get<float>(in);
    if (!std::isfinite(data[i])) throw DataError("non-finite model weight");
  }
}

}  // namespace

void write_models(std::ostream& out, std::span<const ClassifierModel> models) {
  for (const auto& m : models) {
    const CnnShape& s = m.net.shape();
    binio::put_magic(out, "TCNN");
    binio::put<std::uint8_t>(out, m.mode == ClassifierMode::Bi ? 0 : 1);
    binio::put<std::int32_t>(out, m.layer);
    for (int v : {s.in_channels, s.input_size, s.widths[0], s.widths[1], s.widths[2], s.outputs})
      binio::put<std::int32_t>(out, v);
    const double* p = m.net.params().data();
    int cin = s.in_channels;
    for (int l = 0; l < 3; ++l) {
      const int wdims[] = {s.widths[l], cin, 3, 3};
      put_tensor(out, wdims, p);
      p += static_cast<std::size_t>(s.widths[l]) * cin * 9;
      const int bdims[] = {s.widths[l]};
      put_tensor(out, bdims, p);
      p += s.widths[l];
      cin = s.widths[l];
    }
    const int hdims[] = {s.outputs, cin};
    put_tensor(out, hdims, p);
    p += static_cast<std::size_t>(s.outputs) * cin;
    const int hb[] = {s.outputs};
    put_tensor(out, hb, p);
  }
  if (!out) throw DataError("failed writing model");
}

std::vector<ClassifierModel> read_models(std::istream& in) {
  std::vector<ClassifierModel> models;
  while (in.peek() != std::char_traits<char>::eof()) {
    binio::expect_magic(in, "TCNN");
    ClassifierModel m;
    const int mode = binio::get<std::uint8_t>(in);
    if (mode > 1) throw DataError("bad model mode");
    m.mode = mode == 0 ? ClassifierMode::Bi : ClassifierMode::Mu;
    m.layer = binio::get<std::int32_t>(in);
    CnnShape s;
    s.in_channels = binio::get<std::int32_t>(in);
    s.input_size = binio::get<std::int32_t>(in);
    for (auto& w : s.widths) w = binio::get<std::int32_t>(in);
    s.outputs = binio::get<std::int32_t>(in);
    if (s.in_channels < 1 || s.in_channels > 64 || s.input_size < 1 || s.input_size > 4096 || s.outputs < 1 ||
        s.outputs > 64)
      throw DataError("implausible model shape");
    for (int w : s.widths)
      if (w < 1 || w > 4096) throw DataError("implausible model shape");
    if ((m.mode == ClassifierMode::Bi) != (s.outputs == 1)) throw DataError("model outputs do not match mode");
    m.net = TinyCnn(s);
    double* p = m.net.params().data();
    int cin = s.in_channels;
    for (int l = 0; l < 3; ++l) {
      const int wdims[] = {s.widths[l], cin, 3, 3};
      get_tensor(in, wdims, p);
      p += static_cast<std::size_t>(s.widths[l]) * cin * 9;
      const int bdims[] = {s.widths[l]};
      get_tensor(in, bdims, p);
      p += s.widths[l];
      cin = s.widths[l];
    }
    const int hdims[] = {s.outputs, cin};
    get_tensor(in, hdims, p);
    p += static_cast<std::size_t>(s.outputs) * cin;
    const int hb[] = {s.outputs};
    get_tensor(in, hb, p);
    models.push_back(std::move(m));
  }
  if (models.empty()) throw DataError("model file holds no networks");
  return models;
}

void save_models(const std::string& path, std::span<const ClassifierModel> models) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  write_models(out, models);
}

std::vector<ClassifierModel> load_models(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return read_models(in);
}

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::array<double, kNumFactors> softmax4(std::span<const double> logits) {
  if (logits.size() != kNumFactors) throw DataError("softmax4 needs four logits");
  const double m = *std::max_element(logits.begin(), logits.end());
  std::array<double, kNumFactors> p{};
  double sum = 0.0;
  for (int i = 0; i < kNumFactors; ++i) sum += p[i] = std::exp(logits[i] - m);
  for (auto& v : p) v /= sum;
  return p;
}

int argmax_factor(std::span<const double> scores) {
  if (scores.size() != kNumFactors) throw DataError("expected four scores");
  int best = 0;
  for (int i = 1; i < kNumFactors; ++i)
    if (scores[i] > scores[best]) best = i;
  return kDownsampleFactors[best];
}

double predict_bi(const TinyCnn& net, const Tensor& input) {
  if (net.shape().outputs != 1) throw DataError("Bi-Class network must have one output");
  return logistic(net.forward(input)[0]);
}

int predict_mu(const TinyCnn& net, const Tensor& input) {
  if (net.shape().outputs != kNumFactors) throw DataError("Mu-Class network must have four outputs");
  return argmax_factor(net.forward(input));
}

double focal_loss(double p, int label, double alpha, double gamma) {
  p = std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
  const double pt = label == 1 ? p : 1.0 - p;
  return alpha * std::pow(1.0 - pt, gamma) * -std::log(pt);
}

double focal_loss_grad(double logit, int label, double alpha, double gamma) {
  const double p = std::clamp(logistic(logit), kProbEpsilon, 1.0 - kProbEpsilon);
  const double pt = label == 1 ? p : 1.0 - p;
  const double sign = label == 1 ? 1.0 : -1.0;
  // d/dz of alpha (1-pt)^g (-ln pt), using dpt/dz = sign * pt (1-pt).
  return sign * alpha * (gamma * pt * std::pow(1.0 - pt, gamma) * std::log(pt) - std::pow(1.0 - pt, gamma + 1.0));
}

std::array<double, kNumFactors> soft_label(std::span<const double> rd_costs, double lambda_s) {
  if (rd_costs.size() != kNumFactors) throw DataError("soft_label needs four costs");
  if (!(lambda_s > 0)) throw DataError("soft label temperature must be positive");
  for (double c : rd_costs)
    if (!(c > 0) || !std::isfinite(c)) throw DataError("RD costs must be positive");
  const double rd_max = *std::max_element(rd_costs.begin(), rd_costs.end());
  std::array<double, kNumFactors> z{};
  for (int i = 0; i < kNumFactors; ++i) z[i] = lambda_s * (rd_max - rd_costs[i]) / rd_max;
  return softmax4(z);
}

double entropy_bits(std::span<const double> dist) {
  double h = 0.0;
  for (double p : dist)
    if (p > 0) h -= p * std::log2(p);
  return h;
}

double mu_weight(std::span<const double> soft) { return std::max(0.0, 2.0 - entropy_bits(soft)); }

double mu_loss(std::span<const double> probs, std::span<const double> soft) {
  if (probs.size() != kNumFactors || soft.size() != kNumFactors) throw DataError("mu_loss needs four classes");
  double ce = 0.0;
  for (int i = 0; i < kNumFactors; ++i) ce -= soft[i] * std::log(std::clamp(probs[i], kProbEpsilon, 1.0));
  return mu_weight(soft) * ce;
}

std::array<double, kNumFactors> mu_loss_grad(std::span<const double> logits, std::span<const double> soft) {
  auto p = softmax4(logits);
  double mass = 0.0;
  for (double s : soft) mass += s;
  const double w = mu_weight(soft);
  std::array<double, kNumFactors> g{};
  for (int i = 0; i < kNumFactors; ++i) g[i] = w * (mass * p[i] - soft[i]);
  return g;
}

LabeledSample make_sample(Tensor input, const std::array<double, kNumFactors>& rd_costs, int layer,
                          int rate_point, double lambda_s) {
  LabeledSample s;
  s.input = std::move(input);
  s.rd_costs = rd_costs;
  s.hard_label = 0;
  for (int i = 1; i < kNumFactors; ++i)
    if (rd_costs[i] < rd_costs[s.hard_label]) s.hard_label = i;
  s.soft = soft_label(rd_costs, lambda_s);
  s.temporal_layer = layer;
  s.rate_point = rate_point;
  return s;
}

std::vector<LabeledSample> build_dataset(std::span<const Sequence> sequences, const GopConfig& gop,
                                         std::span<const QuantConfig> rates, const MotionConfig& mcfg) {
  std::vector<LabeledSample> samples;
  for (std::size_t si = 0; si < sequences.size(); ++si) {
    const Sequence& seq = sequences[si];
    GopConfig cfg = gop;
    cfg.num_frames = static_cast<int>(seq.size());
    const auto schedule = build_schedule(cfg);
    for (std::size_t rp = 0; rp < rates.size(); ++rp) {
      std::vector<std::optional<Frame>> recon(seq.size());
      for (const auto& slot : schedule) {
        const Frame& cur = seq[slot.poc];
        if (slot.is_intra()) {
          recon[slot.poc] = encode_intra(cur, rates[rp]).recon;
          continue;
        }
        const Frame& past = *recon[slot.ref_past];
        const Frame& future = *recon[slot.ref_future];
        auto r = omra_exhaustive(cur, past, future, rates[rp], mcfg);
        LabeledSample s = make_sample(preprocess(cur, past, future), r.record.costs(), slot.temporal_layer,
                                      static_cast<int>(rp));
        s.sequence = static_cast<int>(si);
        s.poc = slot.poc;
        samples.push_back(std::move(s));
        recon[slot.poc] = std::move(r.best.recon);
      }
    }
  }
  return samples;
}

void write_dataset(std::ostream& out, std::span<const LabeledSample> samples) {
  binio::put_magic(out, "OMRD");
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(samples.size()));
  for (const auto& s : samples) {
    const std::size_t n = s.input.data.size();
    const std::uint32_t length =
        static_cast<std::uint32_t>(5 * 4 + 8 * 8 + 3 * 4 + 4 * n);
    binio::put<std::uint32_t>(out, length);
    for (int v : {s.sequence, s.poc, s.temporal_layer, s.rate_point, s.hard_label}) binio::put<std::int32_t>(out, v);
    for (double c : s.rd_costs) binio::put<double>(out, c);
    for (double c : s.soft) binio::put<double>(out, c);
    for (int v : {s.input.channels, s.input.height, s.input.width}) binio::put<std::int32_t>(out, v);
    for (double v : s.input.data) binio::put<float>(out, static_cast<float>(v));
  }
  if (!out) throw DataError("failed writing dataset");
}

std::vector<LabeledSample> read_dataset(std::istream& in) {
  binio::expect_magic(in, "OMRD");
  const std::uint32_t count = binio::get<std::uint32_t>(in);
  std::vector<LabeledSample> samples;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t length = binio::get<std::uint32_t>(in);
    LabeledSample s;
    s.sequence = binio::get<std::int32_t>(in);
    s.poc = binio::get<std::int32_t>(in);
    s.temporal_layer = binio::get<std::int32_t>(in);
    s.rate_point = binio::get<std::int32_t>(in);
    s.hard_label = binio::get<std::int32_t>(in);
    if (s.hard_label < 0 || s.hard_label >= kNumFactors) throw DataError("bad hard label in dataset");
    for (auto& c : s.rd_costs) c = binio::get<double>(in);
    for (auto& c : s.soft) c = binio::get<double>(in);
    const int c = binio::get<std::int32_t>(in);
    const int h = binio::get<std::int32_t>(in);
    const int w = binio::get<std::int32_t>(in);
    if (c < 1 || h < 1 || w < 1 || c > 64 || h > 4096 || w > 4096) throw DataError("bad tensor shape in dataset");
    const std::size_t n = static_cast<std::size_t>(c) * h * w;
    if (length != 5 * 4 + 8 * 8 + 3 * 4 + 4 * n) throw DataError("dataset record length mismatch");
    s.input = Tensor(c, h, w);
    for (auto& v : s.input.data) v = binio::get<float>(in);
    samples.push_back(std::move(s));
  }
  return samples;
}

void write_manifest(std::ostream& out, std::span<const LabeledSample> samples) {
  out << "samples=" << samples.size() << '\n';
  if (!samples.empty())
    out << "input=" << samples[0].input.channels << 'x' << samples[0].input.height << 'x' << samples[0].input.width
        << '\n';
  std::map<int, int> per_layer;
  for (const auto& s : samples) ++per_layer[s.temporal_layer];
  for (auto [layer, n] : per_layer) out << "layer_" << layer << '=' << n << '\n';
  out << "index,sequence,poc,layer,rate_point,S_opt,cost_1,cost_2,cost_4,cost_8\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    out << i << ',' << s.sequence << ',' << s.poc << ',' << s.temporal_layer << ',' << s.rate_point << ','
        << s.best_scale();
    for (double c : s.rd_costs) out << ',' << c;
    out << '\n';
  }
}

void save_dataset(const std::string& path, std::span<const LabeledSample> samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  write_dataset(out, samples);
  std::ofstream manifest(path + ".manifest");
  if (!manifest) throw DataError("cannot open " + path + ".manifest for writing");
  write_manifest(manifest, samples);
}

std::vector<LabeledSample> load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return read_dataset(in);
}

void validate(const TrainConfig& cfg) {
  if (!(cfg.gamma >= 0)) throw DataError("gamma must be nonnegative");
  if (!(cfg.lambda_s > 0)) throw DataError("lambda_s must be positive");
  if (cfg.alpha)
    for (double a : *cfg.alpha)
      if (!(a > 0 && a <= 1)) throw DataError("alpha must lie in (0, 1]");
  if (!(cfg.learning_rate > 0)) throw DataError("learning rate must be positive");
  if (!(cfg.momentum >= 0 && cfg.momentum < 1)) throw DataError("momentum must lie in [0, 1)");
  if (cfg.epochs < 0) throw DataError("epochs must be nonnegative");
  if (cfg.batch_size < 1) throw DataError("batch size must be positive");
  for (int w : cfg.widths)
    if (w < 1) throw DataError("network widths must be positive");
}

namespace {

std::array<double, 2> alpha_from_counts(double n_coarse, double n_full) {
  if (n_coarse == 0 || n_full == 0) return {1.0, 1.0};
  const double mean = 0.5 * (1.0 / n_coarse + 1.0 / n_full);
  return {1.0 / n_coarse / mean, 1.0 / n_full / mean};
}

}  // namespace

std::array<double, 2> inverse_frequency_alpha(std::span<const LabeledSample> samples) {
  double n[2] = {0, 0};
  for (const auto& s : samples) n[s.hard_label == 0 ? 1 : 0] += 1;
  return alpha_from_counts(n[0], n[1]);
}

namespace {

struct Trainer {
  const TrainConfig& cfg;
  ClassifierMode mode;
  std::vector<double>* trajectory;
  long* step;

  TinyCnn run(std::span<const LabeledSample* const> data, const CnnShape& shape, std::uint64_t seed,
              const std::array<double, 2>& alpha) {
    TinyCnn net = TinyCnn::initialized(shape, seed);
    if (cfg.epochs == 0 || data.empty()) return net;
    std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> velocity(net.params().size(), 0.0);
    std::vector<double> grad(net.params().size(), 0.0);
    TinyCnn::Cache cache;
    std::vector<std::array<double, kNumFactors>> soft(data.size());
    if (mode == ClassifierMode::Mu)
      for (std::size_t i = 0; i < data.size(); ++i) soft[i] = soft_label(data[i]->rd_costs, cfg.lambda_s);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      seeded_shuffle(order, rng);
      for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = 0.0;
        for (std::size_t b = start; b < end; ++b) {
          const LabeledSample& s = *data[order[b]];
          std::vector<double> logits;
          try {
            logits = net.forward(s.input, cache);
          } catch (const DivergenceError&) {
            throw DivergenceError("non-finite activation during training", *step);
          }
          if (mode == ClassifierMode::Bi) {
            const int label = s.hard_label == 0 ? 1 : 0;
            const double a = alpha[label];
            loss += focal_loss(logistic(logits[0]), label, a, cfg.gamma);
            const double g = focal_loss_grad(logits[0], label, a, cfg.gamma);
            net.backward(cache, std::span<const double>(&g, 1), grad);
          } else {
            const auto& sl = soft[order[b]];
            loss += mu_loss(softmax4(logits), sl);
            const auto g = mu_loss_grad(logits, sl);
            net.backward(cache, g, grad);
          }
        }
        const double n = static_cast<double>(end - start);
        loss /= n;
        if (!std::isfinite(loss)) throw DivergenceError("non-finite loss", *step);
        trajectory->push_back(loss);
        auto& p = net.params();
        for (std::size_t i = 0; i < p.size(); ++i) {
          velocity[i] = cfg.momentum * velocity[i] + grad[i] / n;
          p[i] -= cfg.learning_rate * velocity[i];
        }
        if (!all_finite(p)) throw DivergenceError("non-finite weights", *step);
        ++*step;
      }
    }
    return net;
  }
};

}  // namespace

TrainResult train(std::span<const LabeledSample> samples, const TrainConfig& cfg, ClassifierMode mode) {
  validate(cfg);
  if (samples.empty()) throw DataError("empty dataset");
  const Tensor& first = samples.front().input;
  if (first.height != first.width) throw DataError("classifier inputs must be square");
  for (const auto& s : samples)
    if (s.input.channels != first.channels || s.input.height != first.height || s.input.width != first.width)
      throw DataError("dataset samples differ in shape");

  CnnShape shape;
  shape.in_channels = first.channels;
  shape.input_size = first.height;
  shape.widths = cfg.widths;
  shape.outputs = mode == ClassifierMode::Bi ? 1 : kNumFactors;

  TrainResult result;
  long step = 0;
  Trainer trainer{cfg, mode, &result.loss_trajectory, &step};
  if (mode == ClassifierMode::Mu) {
    std::vector<const LabeledSample*> all;
    for (const auto& s : samples) all.push_back(&s);
    result.models.push_back({mode, -1, trainer.run(all, shape, cfg.seed, {1.0, 1.0})});
    return result;
  }

  std::map<int, std::vector<const LabeledSample*>> by_layer;
  for (const auto& s : samples) by_layer[s.temporal_layer].push_back(&s);
  for (const auto& [layer, subset] : by_layer) {
    std::array<double, 2> alpha;
    if (cfg.alpha) {
      alpha = *cfg.alpha;
    } else {
      double n[2] = {0, 0};
      for (const auto* s : subset) n[s->hard_label == 0 ? 1 : 0] += 1;
      alpha = alpha_from_counts(n[0], n[1]);
    }
    const std::uint64_t seed = cfg.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(layer);
    result.models.push_back({mode, layer, trainer.run(subset, shape, seed, alpha)});
  }
  return result;
}

}  // namespace omra
