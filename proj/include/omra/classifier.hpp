#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "omra/codec.hpp"
#include "omra/gop.hpp"

namespace omra {

struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;  // channel-major, then rows

  Tensor() = default;
  Tensor(int c, int h, int w, double fill = 0.0);

  double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  const double& at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

inline constexpr int kClassifierInput = 64;

// Stacks (past, current, future) as a 3 x size x size tensor in [-0.5, 0.5].
// Frames larger than `size` are box-downsampled by the largest fitting power
// of two, then bilinearly resized.
Tensor preprocess(const Frame& cur, const Frame& ref_past, const Frame& ref_future, int size = kClassifierInput);

// Work done by preprocess on three width x height frames: box reductions plus
// a bilinear resize (booked at the flow-resample rate) when sizes differ.
ComplexityLedger preprocess_macs(int width, int height, int size = kClassifierInput);

struct CnnShape {
  int in_channels = 3;
  int input_size = kClassifierInput;
  std::array<int, 3> widths{16, 32, 64};
  int outputs = 1;
  friend bool operator==(const CnnShape&, const CnnShape&) = default;
};

// Three 3x3 stride-2 convolutions with ReLU, global average pool, linear head.
class TinyCnn {
 public:
  struct Cache {
    std::array<Tensor, 3> padded_in;   // zero-padded input of each conv
    std::array<Tensor, 3> activation;  // post-ReLU output of each conv
    std::vector<double> pooled;
    std::vector<double> logits;
  };

  TinyCnn() = default;
  explicit TinyCnn(const CnnShape& shape);  // all parameters zero

  // He-style uniform initialization scaled by fan-in; biases zero.
  static TinyCnn initialized(const CnnShape& shape, std::uint64_t seed);

  const CnnShape& shape() const { return shape_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  std::vector<double> forward(const Tensor& input) const;
  std::vector<double> forward(const Tensor& input, Cache& cache) const;

  // Accumulates dLoss/dparams into `grad` (sized like params()).
  void backward(const Cache& cache, std::span<const double> dlogits, std::vector<double>& grad) const;

  std::uint64_t forward_macs() const;
  int conv_output_size(int layer) const;

  friend bool operator==(const TinyCnn&, const TinyCnn&) = default;

 private:
  std::size_t conv_weight_offset(int layer) const;
  std::size_t conv_bias_offset(int layer) const;
  std::size_t head_offset() const;

  CnnShape shape_;
  std::vector<double> params_;
};

enum class ClassifierMode { Bi, Mu };

std::string_view mode_name(ClassifierMode m);
ClassifierMode parse_mode(std::string_view name);

struct ClassifierModel {
  ClassifierMode mode = ClassifierMode::Mu;
  int layer = -1;  // -1 for a model shared by all layers
  TinyCnn net;
  friend bool operator==(const ClassifierModel&, const ClassifierModel&) = default;
};

void write_models(std::ostream& out, std::span<const ClassifierModel> models);
std::vector<ClassifierModel> read_models(std::istream& in);
void save_models(const std::string& path, std::span<const ClassifierModel> models);
std::vector<ClassifierModel> load_models(const std::string& path);

double logistic(double z);
std::array<double, kNumFactors> softmax4(std::span<const double> logits);

// Probability that full resolution (S = 1) is optimal.
double predict_bi(const TinyCnn& net, const Tensor& input);
int predict_mu(const TinyCnn& net, const Tensor& input);
int argmax_factor(std::span<const double> scores);  // ties to the smaller S

inline constexpr double kProbEpsilon = 1e-7;

double focal_loss(double p, int label, double alpha, double gamma);
// dLoss/dlogit where p = logistic(logit).
double focal_loss_grad(double logit, int label, double alpha, double gamma);

std::array<double, kNumFactors> soft_label(std::span<const double> rd_costs, double lambda_s);
double entropy_bits(std::span<const double> dist);
double mu_weight(std::span<const double> soft);
double mu_loss(std::span<const double> probs, std::span<const double> soft);
std::array<double, kNumFactors> mu_loss_grad(std::span<const double> logits, std::span<const double> soft);

struct LabeledSample {
  Tensor input;
  std::array<double, kNumFactors> rd_costs{};
  int hard_label = 0;  // factor index of the cheapest S
  std::array<double, kNumFactors> soft{};
  int temporal_layer = 1;
  int rate_point = 0;
  int sequence = 0;
  int poc = 0;

  int best_scale() const { return kDownsampleFactors[hard_label]; }
};

inline constexpr double kDefaultSoftTemperature = 10.0;

LabeledSample make_sample(Tensor input, const std::array<double, kNumFactors>& rd_costs, int layer,
                          int rate_point, double lambda_s = kDefaultSoftTemperature);

// Encodes every sequence at every rate point with exhaustive search on all
// B-frames; one sample per (frame, rate point). Order: sequence, rate point,
// coding order.
std::vector<LabeledSample> build_dataset(std::span<const Sequence> sequences, const GopConfig& gop,
                                         std::span<const QuantConfig> rates, const MotionConfig& mcfg = {});

void write_dataset(std::ostream& out, std::span<const LabeledSample> samples);
std::vector<LabeledSample> read_dataset(std::istream& in);
void write_manifest(std::ostream& out, std::span<const LabeledSample> samples);
// Writes `path` and `path.manifest`.
void save_dataset(const std::string& path, std::span<const LabeledSample> samples);
std::vector<LabeledSample> load_dataset(const std::string& path);

struct TrainConfig {
  double gamma = 2.0;
  std::optional<std::array<double, 2>> alpha;  // per class {S>1, S=1}; derived from data when unset
  double lambda_s = kDefaultSoftTemperature;
  double learning_rate = 1e-2;
  double momentum = 0.9;
  int epochs = 30;
  int batch_size = 32;
  std::uint64_t seed = 1;
  std::array<int, 3> widths{16, 32, 64};
};

void validate(const TrainConfig& cfg);

struct TrainResult {
  std::vector<ClassifierModel> models;  // bi: one per layer, ascending; mu: one shared
  std::vector<double> loss_trajectory;  // mean batch loss at every step
};

// Inverse-frequency class weights {S>1, S=1}, normalized to mean 1.
std::array<double, 2> inverse_frequency_alpha(std::span<const LabeledSample> samples);

TrainResult train(std::span<const LabeledSample> samples, const TrainConfig& cfg, ClassifierMode mode);

}  // namespace omra
