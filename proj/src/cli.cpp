#include "omra/cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "omra/classifier.hpp"
#include "omra/error.hpp"
#include "omra/eval.hpp"
#include "omra/keyvalue.hpp"
#include "omra/policy.hpp"

namespace omra::cli {

namespace fs = std::filesystem;

namespace {

double parse_number(const std::string& s, const std::string& what) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw UsageError("bad " + what + " '" + s + "'");
  return v;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, mode);
  if (!f) throw DataError("cannot write " + path.string());
  return f;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path.string());
  return f;
}

Sequence load_sequence(const std::string& path) { return read_sequence(path, format_from_path(path)); }

// Options shared by most subcommands.
struct Common {
  std::string config;
  std::uint64_t seed = 1;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "key=value file; keys are flag names without dashes, flags win");
  sub->add_option("--seed", c.seed, "Seed for every random choice")->capture_default_str();
}

// Fills options left unset on the command line from the --config file.
void apply_config(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  const KeyValues kv = read_key_values(path);
  for (const auto& [key, value] : kv) {
    CLI::Option* opt = nullptr;
    for (auto* o : sub->get_options())
      if (o->get_single_name() == key) opt = o;
    if (!opt || key == "config" || key == "help") throw UsageError("unknown config key '" + key + "'");
    if (opt->count() > 0) continue;
    std::istringstream ss(value);
    std::vector<std::string> tokens;
    for (std::string t; ss >> t;) tokens.push_back(t);
    if (tokens.empty()) continue;
    opt->add_result(tokens);
    opt->run_callback();
  }
}

void require(bool present, const std::string& flag) {
  if (!present) throw UsageError("missing required flag " + flag);
}

struct MotionFlags {
  int search_range = 8;
  int block_size = 8;
  bool half_pel = false;

  MotionConfig config() const {
    MotionConfig m;
    m.search_range = search_range;
    m.block_size = block_size;
    m.refinement = half_pel ? Refinement::HalfPel : Refinement::None;
    validate(m);
    return m;
  }
};

void add_motion(CLI::App* sub, MotionFlags& m) {
  sub->add_option("--search-range", m.search_range, "Motion search range in pels at the search scale")
      ->capture_default_str();
  sub->add_option("--block-size", m.block_size, "Motion block size")->capture_default_str();
  sub->add_flag("--half-pel", m.half_pel, "Enable half-pel flow refinement");
}

GopConfig make_gop(int gop_size, int intra, int frames) {
  GopConfig g{gop_size, intra, frames};
  try {
    validate(g);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  return g;
}

// ---- gen ----

struct GenArgs {
  Common common;
  std::string spec, out;
};

void run_gen(const GenArgs& a, CLI::App* sub, std::ostream& out) {
  require(!a.spec.empty(), "--spec");
  require(!a.out.empty(), "--out");
  SyntheticSpec spec = read_synthetic_spec(a.spec);
  if (sub->get_option("--seed")->count() > 0) spec.texture_seed = a.common.seed;
  const Sequence seq = generate_synthetic(spec);
  if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
  write_sequence(a.out, format_from_path(a.out), seq);
  out << "frames=" << seq.size() << " size=" << spec.width << "x" << spec.height << "\n";
}

// ---- label ----

struct LabelArgs {
  Common common;
  MotionFlags motion;
  std::vector<std::string> in, rates{"default"};
  int gop = 32, intra = 32;
  std::string out;
};

void run_label(const LabelArgs& a, std::ostream& out) {
  require(!a.in.empty(), "--in");
  require(!a.out.empty(), "--out");
  std::vector<Sequence> seqs;
  for (const auto& p : a.in) seqs.push_back(load_sequence(p));
  const GopConfig gop = make_gop(a.gop, a.intra, static_cast<int>(seqs.front().size()));
  const auto ladder = parse_rates(a.rates);
  const auto samples = build_dataset(seqs, gop, ladder, a.motion.config());
  if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
  save_dataset(a.out, samples);
  out << "samples=" << samples.size() << "\n";
}

// ---- train ----

struct TrainArgs {
  Common common;
  std::vector<std::string> dataset;
  std::string mode, out, loss_log;
  TrainConfig cfg;
  std::vector<double> alpha;
};

void run_train(TrainArgs a, std::ostream& out) {
  require(!a.dataset.empty(), "--dataset");
  require(!a.mode.empty(), "--mode");
  require(!a.out.empty(), "--out");
  const ClassifierMode mode = parse_mode(a.mode);
  if (!a.alpha.empty()) {
    if (a.alpha.size() != 2) throw UsageError("--alpha takes two weights: S>1 and S=1");
    a.cfg.alpha = std::array<double, 2>{a.alpha[0], a.alpha[1]};
  }
  a.cfg.seed = a.common.seed;
  try {
    validate(a.cfg);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  std::vector<LabeledSample> samples;
  for (const auto& p : a.dataset) {
    auto part = load_dataset(p);
    samples.insert(samples.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  const TrainResult result = train(samples, a.cfg, mode);
  if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
  save_models(a.out, result.models);
  if (!a.loss_log.empty()) {
    auto f = open_out(a.loss_log);
    f.precision(17);
    f << "step,loss\n";
    for (std::size_t i = 0; i < result.loss_trajectory.size(); ++i) f << i << ',' << result.loss_trajectory[i] << '\n';
  }
  out << "models=" << result.models.size() << " steps=" << result.loss_trajectory.size();
  if (!result.loss_trajectory.empty()) out << " final_loss=" << result.loss_trajectory.back();
  out << "\n";
}

// ---- encode ----

struct EncodeArgs {
  Common common;
  MotionFlags motion;
  std::string in, variant, out, log, search_log, complexity, rdpoints, name, recon;
  std::vector<std::string> models;
  std::optional<int> max_layer;
  int gop = 32, intra = 32;
  double q = 16.0, lambda = 1.0;
  std::optional<int> rate_point;
};

PolicyConfig load_policy(const EncodeArgs& a) {
  PolicyConfig policy = parse_variant(a.variant);
  policy.max_adapt_layer = a.max_layer;
  std::vector<ClassifierModel> bi, mu;
  for (const auto& p : a.models)
    for (auto& m : load_models(p)) (m.mode == ClassifierMode::Bi ? bi : mu).push_back(std::move(m));
  if (policy.variant == Variant::Bi) {
    if (bi.empty()) throw UsageError("variant bi needs --models with bi-class networks");
    policy.bi = CnnFullResPredictor::from_models(bi);
  }
  if (policy.variant == Variant::Mu || policy.variant == Variant::Co) {
    if (mu.empty()) throw UsageError("variant " + a.variant + " needs --models with a mu-class network");
    policy.mu = CnnScalePredictor::from_models(mu);
  }
  return policy;
}

void run_encode(const EncodeArgs& a, std::ostream& out) {
  require(!a.in.empty(), "--in");
  require(!a.variant.empty(), "--variant");
  require(!a.out.empty(), "--out");
  const Sequence seq = load_sequence(a.in);
  const GopConfig gop = make_gop(a.gop, a.intra, static_cast<int>(seq.size()));
  QuantConfig quant{a.q, FlowPrecision::IntegerPel, a.lambda};
  if (a.rate_point) {
    const auto ladder = default_rate_ladder();
    if (*a.rate_point < 0 || *a.rate_point >= static_cast<int>(ladder.size()))
      throw UsageError("--rate-point must be in [0," + std::to_string(ladder.size() - 1) + "]");
    quant = ladder[*a.rate_point];
  }
  if (a.motion.half_pel) quant.flow_precision = FlowPrecision::HalfPel;
  try {
    validate(quant);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  const PolicyConfig policy = load_policy(a);
  validate(policy, gop);

  const SequenceResult r = encode_sequence(seq, gop, quant, policy, a.motion.config());
  {
    auto f = open_out(a.out, std::ios::binary);
    write_container(f, r.container);
  }
  if (!a.log.empty()) {
    auto f = open_out(a.log);
    write_decision_log(f, r.log);
  }
  if (!a.search_log.empty()) {
    auto f = open_out(a.search_log);
    write_search_log(f, r.search_log);
  }
  const std::string vname = variant_name(policy);
  if (!a.complexity.empty()) {
    auto f = open_out(a.complexity);
    std::vector<std::pair<std::string, ComplexityLedger>> rows{{vname, r.macs}};
    write_complexity_csv(f, rows);
  }
  if (!a.recon.empty()) write_sequence(a.recon, format_from_path(a.recon), r.recon);
  const SequenceQuality q = evaluate_result(seq, r);
  if (!a.rdpoints.empty()) {
    const bool fresh = !fs::exists(a.rdpoints) || fs::file_size(a.rdpoints) == 0;
    std::ostringstream ss;
    const std::string seq_name = a.name.empty() ? fs::path(a.in).stem().string() : a.name;
    std::vector<RdRow> row{{seq_name, vname, quant.q_step, q.bpp, q.psnr}};
    write_rdpoints(ss, row);
    std::string text = ss.str();
    if (!fresh) text = text.substr(text.find('\n') + 1);
    auto f = open_out(a.rdpoints, std::ios::app);
    f << text;
  }
  out << "variant=" << vname << " bpp=" << q.bpp << " psnr=" << q.psnr
      << " kmac_per_pixel=" << r.macs.kmac_per_pixel() << "\n";
}

// ---- eval ----

struct EvalArgs {
  Common common;
  std::string in, recon, out;
};

void run_eval(const EvalArgs& a, std::ostream& out) {
  require(!a.in.empty(), "--in");
  require(!a.recon.empty(), "--recon");
  const Sequence seq = load_sequence(a.in);
  std::ifstream f(a.recon, std::ios::binary);
  if (!f) throw DataError("cannot open " + a.recon);
  const Container c = read_container(f);
  const SequenceQuality q = evaluate_container(seq, c);
  if (a.out.empty()) {
    write_quality_csv(out, q);
  } else {
    auto o = open_out(a.out);
    write_quality_csv(o, q);
    out << "bpp=" << q.bpp << " psnr=" << q.psnr << "\n";
  }
}

// ---- bdrate ----

struct BdArgs {
  Common common;
  std::string anchor, test, anchor_variant, test_variant, csv;
};

std::map<std::string, RdCurve> curves_for(const std::string& path, const std::string& variant) {
  auto f = open_in(path);
  const auto rows = read_rdpoints(f);
  std::map<std::string, RdCurve> out;
  std::set<std::string> variants;
  for (const auto& r : rows) {
    if (!variant.empty() && r.variant != variant) continue;
    variants.insert(r.variant);
    out[r.sequence].points.push_back({r.bpp, r.psnr});
  }
  if (variants.size() > 1) throw UsageError(path + " holds several variants; pick one with a variant flag");
  if (out.empty()) throw DataError("no RD points in " + path);
  return out;
}

void run_bdrate(const BdArgs& a, std::ostream& out) {
  require(!a.anchor.empty(), "--anchor");
  require(!a.test.empty(), "--test");
  const auto anchor = curves_for(a.anchor, a.anchor_variant);
  const auto test = curves_for(a.test, a.test_variant);
  std::vector<BdRow> rows;
  double sum = 0;
  for (const auto& [name, curve] : anchor) {
    auto it = test.find(name);
    if (it == test.end()) continue;
    const double v = bd_rate(curve, it->second);
    rows.push_back({name, a.test_variant.empty() ? "test" : a.test_variant,
                    a.anchor_variant.empty() ? "anchor" : a.anchor_variant, v});
    sum += v;
  }
  if (rows.empty()) throw DataError("anchor and test share no sequence");
  if (!a.csv.empty()) {
    auto f = open_out(a.csv);
    write_bdrate_csv(f, rows);
  }
  if (rows.size() > 1)
    for (const auto& r : rows) out << r.sequence << ' ' << format_percent(r.bd_rate) << '\n';
  out << format_percent(sum / static_cast<double>(rows.size())) << '\n';
}

// ---- report ----

struct ReportArgs {
  Common common;
  std::vector<std::string> logs, oracle, complexity, rdpoints;
  std::string anchor = "fixed1", out;
};

std::vector<DecisionRow> read_log(const std::string& path) {
  auto f = open_in(path);
  return read_decision_log(f);
}

void run_report(const ReportArgs& a, std::ostream& out) {
  require(!a.logs.empty(), "--logs");
  require(!a.out.empty(), "--out");
  if (!a.oracle.empty() && a.oracle.size() != a.logs.size())
    throw UsageError("--oracle needs one log per --logs entry");
  fs::create_directories(a.out);

  std::vector<std::pair<int, int>> pairs;
  for (std::size_t i = 0; i < a.logs.size(); ++i) {
    const auto rows = read_log(a.logs[i]);
    if (a.oracle.empty()) {
      for (const auto& r : rows)
        if (r.layer > 0 && r.predicted) pairs.emplace_back(*r.predicted, r.scale);
      continue;
    }
    std::map<int, int> truth;
    for (const auto& r : read_log(a.oracle[i]))
      if (r.layer > 0) truth[r.poc] = r.scale;
    for (const auto& r : rows) {
      if (r.layer == 0) continue;
      auto it = truth.find(r.poc);
      if (it == truth.end()) throw DataError("oracle log lacks poc " + std::to_string(r.poc));
      pairs.emplace_back(r.predicted.value_or(r.scale), it->second);
    }
  }
  const ConfusionMatrix m = confusion(pairs);
  {
    auto f = open_out(fs::path(a.out) / "confusion.csv");
    write_confusion_csv(f, m);
  }
  const auto sets = derive_candidate_sets(m.conditionals());
  for (const auto& [pred, set] : sets) {
    out << "pred=" << pred << " set=";
    for (std::size_t i = 0; i < set.size(); ++i) out << (i ? " " : "") << set[i];
    out << "\n";
  }

  if (!a.complexity.empty()) {
    std::vector<std::pair<std::string, ComplexityLedger>> merged;
    for (const auto& p : a.complexity) {
      auto f = open_in(p);
      for (auto& [variant, ledger] : read_complexity_csv(f)) {
        auto it = std::find_if(merged.begin(), merged.end(), [&](const auto& e) { return e.first == variant; });
        if (it == merged.end())
          merged.emplace_back(variant, ledger);
        else
          it->second += ledger;
      }
    }
    auto f = open_out(fs::path(a.out) / "complexity.csv");
    write_complexity_csv(f, merged);
    for (const auto& [variant, ledger] : merged)
      out << "complexity " << variant << " kmac_per_pixel=" << ledger.kmac_per_pixel() << "\n";
  }

  if (!a.rdpoints.empty()) {
    std::vector<RdRow> rows;
    for (const auto& p : a.rdpoints) {
      auto f = open_in(p);
      auto part = read_rdpoints(f);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    {
      auto f = open_out(fs::path(a.out) / "rdpoints.csv");
      write_rdpoints(f, rows);
    }
    const auto curves = curves_by_key(rows);
    std::vector<BdRow> bd;
    for (const auto& [key, curve] : curves) {
      if (key.second == a.anchor) continue;
      auto it = curves.find({key.first, a.anchor});
      if (it == curves.end()) continue;
      bd.push_back({key.first, key.second, a.anchor, bd_rate(it->second, curve)});
    }
    auto f = open_out(fs::path(a.out) / "bdrate.csv");
    write_bdrate_csv(f, bd);
    for (const auto& r : bd) out << "bdrate " << r.sequence << ' ' << r.variant << ' ' << format_percent(r.bd_rate) << "\n";
  }
}

}  // namespace

std::vector<QuantConfig> parse_rates(const std::vector<std::string>& tokens) {
  std::vector<QuantConfig> ladder;
  for (const auto& t : tokens) {
    if (t == "default") {
      for (const auto& q : default_rate_ladder()) ladder.push_back(q);
      continue;
    }
    const auto colon = t.find(':');
    if (colon == std::string::npos) throw UsageError("rate point '" + t + "' is not q_step:lambda");
    QuantConfig q;
    q.q_step = parse_number(t.substr(0, colon), "q_step");
    q.lambda = parse_number(t.substr(colon + 1), "lambda");
    try {
      validate(q);
    } catch (const DataError& e) {
      throw UsageError(e.what());
    }
    ladder.push_back(q);
  }
  if (ladder.empty()) throw UsageError("empty rate ladder");
  return ladder;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Per-frame motion resolution adaptation for a hierarchical-B video codec"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic sequence from a key=value spec");
  add_common(gen_cmd, gen.common);
  gen_cmd->add_option("--spec", gen.spec, "Synthetic spec file (width, height, frames, vx, vy, seed, occluder_*)");
  gen_cmd->add_option("--out", gen.out, "Output sequence (.y4m, otherwise raw planar with a .hdr sidecar)");

  LabelArgs label;
  auto* label_cmd = app.add_subcommand("label", "Build an oracle-labeled dataset by exhaustive search");
  add_common(label_cmd, label.common);
  add_motion(label_cmd, label.motion);
  label_cmd->add_option("--in", label.in, "Input sequences");
  label_cmd->add_option("--gop", label.gop, "GOP size (power of two)")->capture_default_str();
  label_cmd->add_option("--intra", label.intra, "Intra period (multiple of the GOP size)")->capture_default_str();
  label_cmd->add_option("--rates", label.rates, "Rate ladder: 'default' or q_step:lambda tokens")
      ->capture_default_str();
  label_cmd->add_option("--out", label.out, "Dataset file; a .manifest is written next to it");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a bi- or mu-class classifier");
  add_common(train_cmd, tr.common);
  train_cmd->add_option("--dataset", tr.dataset, "Dataset files from label");
  train_cmd->add_option("--mode", tr.mode, "bi (one network per temporal layer) or mu (one shared network)");
  train_cmd->add_option("--out", tr.out, "Model file");
  train_cmd->add_option("--epochs", tr.cfg.epochs, "Training epochs")->capture_default_str();
  train_cmd->add_option("--batch-size", tr.cfg.batch_size, "Minibatch size")->capture_default_str();
  train_cmd->add_option("--lr", tr.cfg.learning_rate, "SGD learning rate")->capture_default_str();
  train_cmd->add_option("--momentum", tr.cfg.momentum, "SGD momentum")->capture_default_str();
  train_cmd->add_option("--gamma", tr.cfg.gamma, "Focal loss focusing parameter")->capture_default_str();
  train_cmd->add_option("--alpha", tr.alpha, "Focal class weights for S>1 and S=1 (default: inverse frequency)")
      ->expected(2);
  train_cmd->add_option("--lambda-s", tr.cfg.lambda_s, "Soft-label temperature")->capture_default_str();
  train_cmd->add_option("--loss-log", tr.loss_log, "CSV of the per-step mean batch loss");

  EncodeArgs enc;
  auto* enc_cmd = app.add_subcommand("encode", "Encode a sequence under one decision variant");
  add_common(enc_cmd, enc.common);
  add_motion(enc_cmd, enc.motion);
  enc_cmd->add_option("--in", enc.in, "Input sequence");
  enc_cmd->add_option("--variant", enc.variant, "exhaustive, memc, memc_star, bi, mu, co or fixedN (N in 1,2,4,8)");
  enc_cmd->add_option("--max-layer", enc.max_layer, "Adapt only temporal layers <= n; higher layers use S=1");
  enc_cmd->add_option("--models", enc.models, "Model files for the bi, mu and co variants");
  enc_cmd->add_option("--out", enc.out, "Output container");
  enc_cmd->add_option("--log", enc.log, "Per-frame decision log CSV");
  enc_cmd->add_option("--search-log", enc.search_log, "Per-candidate cost CSV for frames that searched");
  enc_cmd->add_option("--complexity", enc.complexity, "MAC ledger CSV");
  enc_cmd->add_option("--rdpoints", enc.rdpoints, "Append this run's rate and PSNR to an RD points CSV");
  enc_cmd->add_option("--name", enc.name, "Sequence name in the RD points CSV (default: input stem)");
  enc_cmd->add_option("--recon", enc.recon, "Write the reconstructed sequence");
  enc_cmd->add_option("--gop", enc.gop, "GOP size (power of two)")->capture_default_str();
  enc_cmd->add_option("--intra", enc.intra, "Intra period (multiple of the GOP size)")->capture_default_str();
  enc_cmd->add_option("--q", enc.q, "Quantizer step")->capture_default_str();
  enc_cmd->add_option("--lambda", enc.lambda, "Rate-distortion multiplier")->capture_default_str();
  enc_cmd->add_option("--rate-point", enc.rate_point, "Use point 0-3 of the default ladder instead of --q/--lambda");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Per-frame PSNR and bits of a container against its source");
  add_common(eval_cmd, ev.common);
  eval_cmd->add_option("--in", ev.in, "Source sequence");
  eval_cmd->add_option("--recon", ev.recon, "Encoded container");
  eval_cmd->add_option("--out", ev.out, "Quality CSV (default: standard output)");

  BdArgs bd;
  auto* bd_cmd = app.add_subcommand("bdrate", "BD-rate of a test RD curve against an anchor");
  add_common(bd_cmd, bd.common);
  bd_cmd->add_option("--anchor", bd.anchor, "Anchor RD points CSV");
  bd_cmd->add_option("--test", bd.test, "Test RD points CSV");
  bd_cmd->add_option("--anchor-variant", bd.anchor_variant, "Variant to take from the anchor CSV");
  bd_cmd->add_option("--test-variant", bd.test_variant, "Variant to take from the test CSV");
  bd_cmd->add_option("--csv", bd.csv, "Per-sequence BD-rate CSV");

  ReportArgs rep;
  auto* rep_cmd = app.add_subcommand("report", "Confusion, candidate sets, complexity and BD-rate tables");
  add_common(rep_cmd, rep.common);
  rep_cmd->add_option("--logs", rep.logs, "Decision logs of the variant under analysis");
  rep_cmd->add_option("--oracle", rep.oracle, "Exhaustive decision logs giving ground truth, one per --logs entry");
  rep_cmd->add_option("--complexity", rep.complexity, "MAC ledger CSVs to merge");
  rep_cmd->add_option("--rdpoints", rep.rdpoints, "RD points CSVs for the BD-rate table");
  rep_cmd->add_option("--anchor", rep.anchor, "Anchor variant for the BD-rate table")->capture_default_str();
  rep_cmd->add_option("--out", rep.out, "Output directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "gen") {
      apply_config(sub, gen.common.config);
      run_gen(gen, sub, out);
    } else if (name == "label") {
      apply_config(sub, label.common.config);
      run_label(label, out);
    } else if (name == "train") {
      apply_config(sub, tr.common.config);
      run_train(tr, out);
    } else if (name == "encode") {
      apply_config(sub, enc.common.config);
      run_encode(enc, out);
    } else if (name == "eval") {
      apply_config(sub, ev.common.config);
      run_eval(ev, out);
    } else if (name == "bdrate") {
      apply_config(sub, bd.common.config);
      run_bdrate(bd, out);
    } else if (name == "report") {
      apply_config(sub, rep.common.config);
      run_report(rep, out);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const DivergenceError& e) {
    err << "diverged at step " << e.step() << ": " << e.what() << "\n";
    return kDivergence;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace omra::cli
