#include "omra/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "omra/error.hpp"

namespace omra {

RdCurve sorted_by_rate(RdCurve curve) {
  std::sort(curve.points.begin(), curve.points.end(),
            [](const RdPoint& a, const RdPoint& b) { return a.rate < b.rate; });
  return curve;
}

void validate(const RdCurve& curve) {
  if (curve.points.size() < 4) throw DataError("RD curve needs at least 4 points");
  RdCurve s = sorted_by_rate(curve);
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    const auto& p = s.points[i];
    if (!(p.rate > 0) || !std::isfinite(p.rate) || !std::isfinite(p.quality))
      throw DataError("RD curve has a nonpositive or non-finite point");
    if (i > 0 && !(p.rate > s.points[i - 1].rate)) throw DataError("RD curve rates are not strictly increasing");
    if (i > 0 && !(p.quality > s.points[i - 1].quality)) throw DataError("RD curve is not monotone");
  }
}

namespace {

double sign(double v) { return (v > 0) - (v < 0); }

// One-sided three-point end slope, limited to keep the interpolant monotone.
double edge_slope(double h0, double h1, double m0, double m1) {
  double d = ((2 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
  if (sign(d) != sign(m0)) return 0.0;
  if (sign(m0) != sign(m1) && std::abs(d) > 3 * std::abs(m0)) return 3 * m0;
  return d;
}

}  // namespace

Pchip::Pchip(std::vector<double> xs, std::vector<double> ys) : x_(std::move(xs)), y_(std::move(ys)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw DataError("interpolation needs matching point lists");
  for (std::size_t i = 1; i < n; ++i)
    if (!(x_[i] > x_[i - 1])) throw DataError("interpolation abscissae must increase strictly");
  std::vector<double> h(n - 1), m(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x_[i + 1] - x_[i];
    m[i] = (y_[i + 1] - y_[i]) / h[i];
  }
  d_.assign(n, 0.0);
  if (n == 2) {
    d_[0] = d_[1] = m[0];
    return;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (m[k - 1] * m[k] <= 0) continue;
    const double w1 = 2 * h[k] + h[k - 1];
    const double w2 = h[k] + 2 * h[k - 1];
    d_[k] = (w1 + w2) / (w1 / m[k - 1] + w2 / m[k]);
  }
  d_[0] = edge_slope(h[0], h[1], m[0], m[1]);
  d_[n - 1] = edge_slope(h[n - 2], h[n - 3], m[n - 2], m[n - 3]);
}

std::size_t Pchip::segment(double x) const {
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t k = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
  return std::min(k, x_.size() - 2);
}

double Pchip::antiderivative(std::size_t k, double t) const {
  const double h = x_[k + 1] - x_[k];
  const double m = (y_[k + 1] - y_[k]) / h;
  const double c2 = (3 * m - 2 * d_[k] - d_[k + 1]) / h;
  const double c3 = (d_[k] + d_[k + 1] - 2 * m) / (h * h);
  return t * (y_[k] + t * (d_[k] / 2 + t * (c2 / 3 + t * c3 / 4)));
}

double Pchip::operator()(double x) const {
  const std::size_t k = segment(x);
  const double h = x_[k + 1] - x_[k];
  const double m = (y_[k + 1] - y_[k]) / h;
  const double t = x - x_[k];
  const double c2 = (3 * m - 2 * d_[k] - d_[k + 1]) / h;
  const double c3 = (d_[k] + d_[k + 1] - 2 * m) / (h * h);
  return y_[k] + t * (d_[k] + t * (c2 + t * c3));
}

double Pchip::integral(double a, double b) const {
  if (a > b) return -integral(b, a);
  double total = 0.0;
  std::size_t k = segment(a);
  const std::size_t last = segment(b);
  double lo = a;
  for (; k <= last; ++k) {
    const double hi = k == last ? b : x_[k + 1];
    total += antiderivative(k, hi - x_[k]) - antiderivative(k, lo - x_[k]);
    lo = hi;
  }
  return total;
}

double bd_rate(const RdCurve& anchor, const RdCurve& test) {
  validate(anchor);
  validate(test);
  auto build = [](const RdCurve& c) {
    RdCurve s = sorted_by_rate(c);
    std::vector<double> q, lr;
    for (const auto& p : s.points) {
      q.push_back(p.quality);
      lr.push_back(std::log10(p.rate));
    }
    return Pchip(q, lr);
  };
  auto qrange = [](const RdCurve& c) {
    auto [lo, hi] = std::minmax_element(c.points.begin(), c.points.end(),
                                        [](const RdPoint& a, const RdPoint& b) { return a.quality < b.quality; });
    return std::pair{lo->quality, hi->quality};
  };
  const auto [alo, ahi] = qrange(anchor);
  const auto [tlo, thi] = qrange(test);
  const double lo = std::max(alo, tlo);
  const double hi = std::min(ahi, thi);
  if (!(hi > lo)) throw DataError("RD curves do not overlap in quality");
  const double diff = (build(test).integral(lo, hi) - build(anchor).integral(lo, hi)) / (hi - lo);
  return (std::pow(10.0, diff) - 1.0) * 100.0;
}

std::uint64_t ConfusionMatrix::row_total(int predicted_index) const {
  std::uint64_t n = 0;
  for (auto c : counts[predicted_index]) n += c;
  return n;
}

Conditionals ConfusionMatrix::conditionals() const {
  Conditionals out;
  for (int r = 0; r < kNumFactors; ++r) {
    const std::uint64_t n = row_total(r);
    if (n == 0) continue;
    std::array<double, kNumFactors> row{};
    for (int c = 0; c < kNumFactors; ++c) row[c] = static_cast<double>(counts[r][c]) / static_cast<double>(n);
    out[r] = row;
  }
  return out;
}

ConfusionMatrix confusion(std::span<const std::pair<int, int>> pairs) {
  if (pairs.empty()) throw DataError("confusion needs at least one pair");
  ConfusionMatrix m;
  for (auto [pred, gt] : pairs) ++m.counts[factor_index(pred)][factor_index(gt)];
  return m;
}

std::map<int, std::vector<int>> derive_candidate_sets(const Conditionals& conditionals) {
  std::map<int, std::vector<int>> out;
  for (int r = 0; r < kNumFactors; ++r) {
    const int pred = kDownsampleFactors[r];
    if (!conditionals[r]) {
      out[pred] = {pred};
      continue;
    }
    const auto& row = *conditionals[r];
    std::vector<int> order{0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return row[a] > row[b]; });
    std::vector<int> set;
    for (int i = 0; i < 2; ++i)
      if (row[order[i]] > 0) set.push_back(kDownsampleFactors[order[i]]);
    if (set.empty()) set.push_back(pred);
    std::sort(set.begin(), set.end());
    out[pred] = set;
  }
  return out;
}

double temporal_complexity(const Sequence& frames) {
  if (frames.size() < 2) throw DataError("temporal complexity needs at least two frames");
  double total = 0.0;
  for (std::size_t i = 1; i < frames.size(); ++i) {
    const auto a = frames[i - 1].samples();
    const auto b = frames[i].samples();
    if (a.size() != b.size()) throw DataError("frames differ in size");
    double sum = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) sum += std::abs(static_cast<int>(a[j]) - static_cast<int>(b[j]));
    total += sum / static_cast<double>(a.size());
  }
  return total / static_cast<double>(frames.size() - 1) / 255.0;
}

namespace {

SequenceQuality measure(const Sequence& source, const Sequence& recon, std::span<const std::uint64_t> bits_by_poc) {
  if (source.size() != recon.size()) throw DataError("source and reconstruction differ in length");
  SequenceQuality q;
  std::uint64_t total_bits = 0;
  std::uint64_t pixels = 0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    FrameQuality f;
    f.poc = static_cast<int>(i);
    f.bits = bits_by_poc[i];
    f.mse = mse(source[i], recon[i]);
    f.psnr = psnr_from_mse(f.mse);
    q.mse += f.mse;
    total_bits += f.bits;
    pixels += static_cast<std::uint64_t>(source[i].width()) * source[i].height();
    q.frames.push_back(f);
  }
  q.mse /= static_cast<double>(source.size());
  q.psnr = psnr_from_mse(q.mse);
  q.bpp = static_cast<double>(total_bits) / static_cast<double>(pixels);
  return q;
}

}  // namespace

SequenceQuality evaluate_container(const Sequence& source, const Container& c) {
  Sequence recon = decode_container(c);
  std::vector<std::uint64_t> bits(recon.size(), 0);
  GopConfig gop = c.gop;
  gop.num_frames = static_cast<int>(c.frames.size());
  const auto schedule = build_schedule(gop);
  for (std::size_t i = 0; i < schedule.size(); ++i) bits[schedule[i].poc] = c.frames[i].bit_count;
  return measure(source, recon, bits);
}

SequenceQuality evaluate_result(const Sequence& source, const SequenceResult& r) {
  std::vector<std::uint64_t> bits(r.recon.size(), 0);
  for (const auto& row : r.log) bits[row.poc] = row.bits;
  return measure(source, r.recon, bits);
}

void write_quality_csv(std::ostream& out, const SequenceQuality& q) {
  auto precision = out.precision(10);
  out << "poc,bits,mse,psnr\n";
  for (const auto& f : q.frames) out << f.poc << ',' << f.bits << ',' << f.mse << ',' << f.psnr << '\n';
  out << "summary," << q.bpp << ',' << q.mse << ',' << q.psnr << '\n';
  out.precision(precision);
}

LadderRun run_ladder(const Sequence& frames, const GopConfig& gop, std::span<const QuantConfig> ladder,
                     const PolicyConfig& policy, const MotionConfig& mcfg) {
  LadderRun run;
  for (const auto& q : ladder) {
    SequenceResult r = encode_sequence(frames, gop, q, policy, mcfg);
    SequenceQuality sq = evaluate_result(frames, r);
    run.curve.points.push_back({sq.bpp, sq.psnr});
    run.macs += r.macs;
    run.results.push_back(std::move(r));
  }
  return run;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double to_double(const std::string& s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw DataError("bad number '" + s + "'");
  return v;
}

}  // namespace

void write_rdpoints(std::ostream& out, std::span<const RdRow> rows) {
  auto precision = out.precision(17);
  out << "sequence,variant,q_step,bpp,psnr\n";
  for (const auto& r : rows)
    out << r.sequence << ',' << r.variant << ',' << r.q_step << ',' << r.bpp << ',' << r.psnr << '\n';
  out.precision(precision);
}

std::vector<RdRow> read_rdpoints(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "sequence,variant,q_step,bpp,psnr") throw DataError("not an rdpoints CSV");
  std::vector<RdRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto c = split(line);
    if (c.size() != 5) throw DataError("rdpoints row needs 5 fields");
    rows.push_back({c[0], c[1], to_double(c[2]), to_double(c[3]), to_double(c[4])});
  }
  return rows;
}

std::map<std::pair<std::string, std::string>, RdCurve> curves_by_key(std::span<const RdRow> rows) {
  std::map<std::pair<std::string, std::string>, RdCurve> out;
  for (const auto& r : rows) out[{r.sequence, r.variant}].points.push_back({r.bpp, r.psnr});
  return out;
}

std::string format_percent(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  std::string s = buf;
  while (s.size() > 2 && s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
  if (s == "-0.0") s = "0.0";
  return s;
}

void write_bdrate_csv(std::ostream& out, std::span<const BdRow> rows) {
  out << "sequence,variant,anchor,bd_rate\n";
  for (const auto& r : rows)
    out << r.sequence << ',' << r.variant << ',' << r.anchor << ',' << format_percent(r.bd_rate) << '\n';
}

void write_complexity_csv(std::ostream& out, std::span<const std::pair<std::string, ComplexityLedger>> rows) {
  auto precision = out.precision(17);
  out << "variant,category,macs,kmac_per_pixel\n";
  for (const auto& [variant, l] : rows) {
    const double px = static_cast<double>(l.pixels);
    for (int c = 0; c < kNumMacCategories; ++c) {
      const auto cat = static_cast<MacCategory>(c);
      out << variant << ',' << category_name(cat) << ',' << l[cat] << ','
          << (px > 0 ? static_cast<double>(l[cat]) / (1000.0 * px) : 0.0) << '\n';
    }
    out << variant << ",total," << l.total() << ',' << l.kmac_per_pixel() << '\n';
  }
  out.precision(precision);
}

std::vector<std::pair<std::string, ComplexityLedger>> read_complexity_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "variant,category,macs,kmac_per_pixel")
    throw DataError("not a complexity CSV");
  std::vector<std::pair<std::string, ComplexityLedger>> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto c = split(line);
    if (c.size() != 4) throw DataError("complexity row needs 4 fields");
    if (out.empty() || out.back().first != c[0]) out.emplace_back(c[0], ComplexityLedger{});
    ComplexityLedger& l = out.back().second;
    std::uint64_t macs = 0;
    auto [ptr, ec] = std::from_chars(c[2].data(), c[2].data() + c[2].size(), macs);
    if (ec != std::errc{} || ptr != c[2].data() + c[2].size()) throw DataError("bad MAC count '" + c[2] + "'");
    const double kpp = to_double(c[3]);
    if (c[1] == "total") {
      if (macs != l.total()) throw DataError("complexity total does not match its categories");
      if (kpp > 0) l.pixels = static_cast<std::uint64_t>(std::llround(static_cast<double>(macs) / (1000.0 * kpp)));
      continue;
    }
    bool found = false;
    for (int k = 0; k < kNumMacCategories; ++k) {
      if (category_name(static_cast<MacCategory>(k)) == c[1]) {
        l[static_cast<MacCategory>(k)] = macs;
        found = true;
      }
    }
    if (!found) throw DataError("unknown complexity category '" + c[1] + "'");
  }
  return out;
}

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& m) {
  auto precision = out.precision(10);
  out << "predicted,gt_1,gt_2,gt_4,gt_8,p_1,p_2,p_4,p_8,candidate_set\n";
  const auto cond = m.conditionals();
  const auto sets = derive_candidate_sets(cond);
  for (int r = 0; r < kNumFactors; ++r) {
    const int pred = kDownsampleFactors[r];
    out << pred;
    for (auto c : m.counts[r]) out << ',' << c;
    for (int c = 0; c < kNumFactors; ++c) {
      out << ',';
      if (cond[r]) out << (*cond[r])[c];
    }
    out << ',';
    const auto& set = sets.at(pred);
    for (std::size_t i = 0; i < set.size(); ++i) out << (i ? " " : "") << set[i];
    out << '\n';
  }
  out.precision(precision);
}

}  // namespace omra
