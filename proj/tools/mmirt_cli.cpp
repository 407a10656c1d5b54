// mmirt: fit multimodal IRT models, decompose parameters, select subsets and
// run the ranking / prediction experiments.

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmirt/mmirt.hpp"

namespace fs = std::filesystem;
using namespace mmirt;
using nlohmann::ordered_json;

namespace {

// Options shared by every subcommand.
struct Common {
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string out_dir = "out";
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Top-level random seed")->capture_default_str();
  sub->add_option("--jobs", c.jobs, "Worker threads for replicas and grid points")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--out-dir", c.out_dir, "Directory for all outputs")->capture_default_str();
}

struct FitFlags {
  std::string family = "m3irt";
  std::string convention = "corrected";
  FitConfig cfg;
};

void add_fit_flags(CLI::App* sub, FitFlags& f) {
  sub->add_option("--family", f.family, "irt, mirt, m2irt or m3irt")
      ->check(CLI::IsMember({"irt", "mirt", "m2irt", "m3irt"}))
      ->capture_default_str();
  sub->add_option("--convention", f.convention, "Ability weights of the M3IRT logit")
      ->check(CLI::IsMember({"corrected", "as_written"}))
      ->capture_default_str();
  sub->add_option("--mirt-dim", f.cfg.mirt_dim, "Ability dimension of MIRT")->capture_default_str();
  sub->add_option("--q", f.cfg.q, "Parameter bound")->capture_default_str();
  sub->add_option("--learning-rate", f.cfg.learning_rate)->capture_default_str();
  sub->add_option("--batch-size", f.cfg.batch_size)->capture_default_str();
  sub->add_option("--max-epochs", f.cfg.max_epochs)->capture_default_str();
  sub->add_option("--patience", f.cfg.patience)->capture_default_str();
}

FitConfig resolve_fit(const FitFlags& f, std::uint64_t seed) {
  FitConfig cfg = f.cfg;
  cfg.family = parse_family(f.family);
  cfg.convention = parse_convention(f.convention);
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

std::vector<FormatIndicator> parse_formats(const std::vector<std::string>& names) {
  std::vector<FormatIndicator> out;
  for (const auto& n : names) out.push_back(parse_format(n));
  if (out.empty()) throw ValidationError("no formats given");
  return out;
}

std::string sha256_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read '" + p.string() + "'");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), std::streamsize(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), std::size_t(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int k = 0; k < len; ++k) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[k]);
  return hex.str();
}

// Tracks the files a command writes and emits the manifest last.
class Outputs {
 public:
  explicit Outputs(std::string dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  fs::path path(const std::string& name) {
    if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
    return fs::path(dir_) / name;
  }

  std::ofstream open(const std::string& name) {
    std::ofstream out(path(name), std::ios::binary);
    if (!out) throw Error("cannot write '" + (fs::path(dir_) / name).string() + "'");
    return out;
  }

  void write_manifest(const std::string& command) {
    std::sort(files_.begin(), files_.end());
    ordered_json j;
    j["command"] = command;
    auto& arr = j["files"] = ordered_json::array();
    for (const auto& f : files_) arr.push_back({{"path", f}, {"sha256", sha256_file(fs::path(dir_) / f)}});
    std::ofstream(fs::path(dir_) / "manifest.json", std::ios::binary) << j.dump(2) << '\n';
  }

 private:
  std::string dir_;
  std::vector<std::string> files_;
};

void write_resolved_config(Outputs& out, const CLI::App& app) {
  out.open("config.ini") << app.config_to_str(true, false);
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::size_t subjects = 24;
  std::size_t items = 900;
  double q = 4;
  double contamination = 0.5;
  std::vector<double> mix{1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::vector<std::string> formats{"00", "01", "10", "11"};
  double density = 1.0;
  std::string convention = "corrected";
  std::string ranges = "default";
  std::string kernel = "m3irt";
  int n_choices = 4;
};

int run_simulate(const CLI::App& app, const Common& c, const SimulateArgs& a) {
  if (a.mix.size() != 3) throw ValidationError("--mix needs three proportions (A,B,C)");
  GroundTruthOptions opt = a.ranges == "wide" ? GroundTruthOptions::wide() : GroundTruthOptions{};
  opt.n_choices = a.n_choices;
  opt.family = parse_family(a.kernel);
  if (is_classic(opt.family)) throw ValidationError("--kernel must be m2irt or m3irt");
  const auto conv = parse_convention(a.convention);
  auto clean = sample_ground_truth(a.subjects, a.items, a.q, conv, derive_seed(c.seed, {1}), opt);
  auto gt = inject_low_quality(clean, a.contamination, {a.mix[0], a.mix[1], a.mix[2]}, derive_seed(c.seed, {2}), opt);
  const auto formats = parse_formats(a.formats);
  auto tensor = sample_responses(gt, formats, a.density, derive_seed(c.seed, {3}));

  Outputs out(c.out_dir);
  save_ground_truth(out.path("ground_truth.json").string(), gt);
  save_responses(out.path("responses.jsonl").string(), tensor, FileFormat::Jsonl);
  save_item_labels(out.path("labels.jsonl").string(), gt.item_ids, gt.labels);
  write_resolved_config(out, app);
  out.write_manifest("simulate");

  std::size_t per_type[4] = {0, 0, 0, 0};
  for (const auto& [id, label] : gt.labels) ++per_type[static_cast<int>(label)];
  const auto summary = summarize(tensor);
  double acc = 0;
  for (const auto& r : summary.subjects) acc += r.accuracy();
  std::cout << "subjects " << gt.subject_ids.size() << ", items " << gt.item_ids.size() << " ("
            << per_type[1] + per_type[2] + per_type[3] << " low-quality: A " << per_type[1] << ", B " << per_type[2]
            << ", C " << per_type[3] << ")\n";
  std::cout << "records " << tensor.size() << ", contamination " << format_double(gt.contamination()) << "\n";
  if (!summary.subjects.empty())
    std::cout << "mean full-format accuracy " << format_double(acc / double(summary.subjects.size())) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct FitArgs {
  std::string responses;
  FitFlags fit;
  std::vector<double> q_grid{2, 4, 8, 16};
  double val_fraction = 0.1;
  double test_fraction = 0.1;
};

int run_fit(const CLI::App& app, const Common& c, const FitArgs& a) {
  auto tensor = load_responses(a.responses);
  if (tensor.empty()) throw ValidationError("no responses in '" + a.responses + "'");
  FitConfig cfg = resolve_fit(a.fit, derive_seed(c.seed, {1}));
  auto parts = mask_cells(tensor, a.val_fraction, a.test_fraction, derive_seed(c.seed, {2}));
  auto result = grid_search_q(parts.train, parts.val, cfg, a.q_grid, c.jobs);

  Outputs out(c.out_dir);
  save_model(out.path("model.json").string(), result.model);
  {
    auto csv = out.open("grid_report.csv");
    csv << "q,val_auc,train_nll,epochs_run\n";
    for (const auto& r : result.report)
      csv << format_double(r.q) << ',' << (r.val_auc ? format_double(*r.val_auc) : "") << ','
          << format_double(r.train_nll) << ',' << r.epochs_run << '\n';
  }
  write_resolved_config(out, app);
  out.write_manifest("fit");

  std::cout << "selected q " << format_double(result.model.q());
  if (result.model.val_auc) std::cout << ", validation AUC " << format_double(*result.model.val_auc);
  if (auto test = auc_on(result.model, parts.test)) std::cout << ", test AUC " << format_double(*test);
  std::cout << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct DecomposeArgs {
  std::string model;
  std::size_t top_k = 3;
};

int run_decompose(const CLI::App& app, const Common& c, const DecomposeArgs& a) {
  auto m = load_model(a.model);
  if (is_classic(m.family())) throw ValidationError("decompose needs an m2irt or m3irt model");
  Outputs out(c.out_dir);

  std::vector<std::size_t> subj(m.subject_ids.size());
  std::iota(subj.begin(), subj.end(), 0);
  auto total = [&](std::size_t i) { return ability_at(m.subject_params(i), kFullFormat); };
  std::sort(subj.begin(), subj.end(), [&](auto l, auto r) {
    const double tl = total(l), tr = total(r);
    return tl != tr ? tl > tr : m.subject_ids[l] < m.subject_ids[r];
  });
  {
    auto csv = out.open("subjects.csv");
    csv << "subject,theta_base,theta_image,theta_text,theta_cross,total\n";
    for (auto i : subj) {
      const auto sp = m.subject_params(i);
      csv << detail::csv_escape(m.subject_ids[i]);
      for (double x : sp.theta) csv << ',' << format_double(x);
      csv << ',' << format_double(total(i)) << '\n';
    }
  }

  std::vector<std::size_t> items(m.item_ids.size());
  std::iota(items.begin(), items.end(), 0);
  auto cross = [&](std::size_t j) { return m.b(j)[kCross]; };
  std::sort(items.begin(), items.end(), [&](auto l, auto r) {
    return cross(l) != cross(r) ? cross(l) > cross(r) : m.item_ids[l] < m.item_ids[r];
  });
  auto item_row = [&](std::ostream& os, std::size_t j) {
    const auto ip = m.item_params(j);
    os << detail::csv_escape(m.item_ids[j]);
    for (double x : ip.b) os << ',' << format_double(x);
    os << ',' << format_double(difficulty_at(ip, kFullFormat)) << '\n';
  };
  {
    auto csv = out.open("items.csv");
    csv << "item,b_base,b_image,b_text,b_cross,b_full\n";
    for (auto j : items) item_row(csv, j);
  }
  {
    auto csv = out.open("cross_extremes.csv");
    csv << "side,item,b_base,b_image,b_text,b_cross,b_full\n";
    const std::size_t k = std::min(a.top_k, items.size());
    for (std::size_t r = 0; r < k; ++r) {
      csv << "highest,";
      item_row(csv, items[r]);
    }
    for (std::size_t r = 0; r < k; ++r) {
      csv << "lowest,";
      item_row(csv, items[items.size() - 1 - r]);
    }
  }
  write_resolved_config(out, app);
  out.write_manifest("decompose");
  std::cout << subj.size() << " subjects, " << items.size() << " items\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct SelectArgs {
  std::string model;
  std::string responses;
  std::string labels;
  std::string subject;
  std::size_t budget = 0;
  double fraction = 0;
  std::string criterion = "doptimal";
  std::string format = "11";
};

int run_select(const CLI::App& app, const Common& c, const SelectArgs& a) {
  auto m = load_model(a.model);
  auto tensor = load_responses(a.responses);
  const auto criterion = parse_criterion(a.criterion);
  const auto s = parse_format(a.format);
  if (!tensor.subject_index(a.subject)) throw ValidationError("subject '" + a.subject + "' has no responses");
  const auto& pool = tensor.items();
  std::size_t budget = a.budget;
  if (budget == 0) {
    if (!(a.fraction > 0 && a.fraction <= 1)) throw ValidationError("give --budget or a --fraction in (0, 1]");
    budget = subset_budget(a.fraction, pool.size());
  }
  CatOptions opt;
  opt.criterion = criterion;
  opt.format = s;
  auto session = run_cat_session(m, tensor_responder(tensor, a.subject), pool, budget, opt);
  if (session.error) throw Error(*session.error);

  LabelMap labels;
  if (!a.labels.empty()) labels = load_item_labels(a.labels);
  Outputs out(c.out_dir);
  {
    auto f = out.open("subset.jsonl");
    for (std::size_t k = 0; k < session.steps.size(); ++k) {
      const auto& st = session.steps[k];
      ordered_json j{{"rank", k + 1}, {"item", st.item}, {"correct", st.correct}};
      if (!labels.empty()) {
        auto it = labels.find(st.item);
        if (it == labels.end()) throw ValidationError("item '" + st.item + "' has no label");
        j["quality"] = std::string(to_string(it->second));
      }
      f << j.dump() << '\n';
    }
  }
  {
    auto f = out.open("session_log.jsonl");
    write_session_log(f, session);
  }
  write_resolved_config(out, app);
  out.write_manifest("select");

  const auto subset = session.subset();
  std::size_t correct = 0;
  for (const auto& st : session.steps) correct += st.correct;
  std::cout << "selected " << subset.size() << " of " << pool.size() << " items, subset accuracy "
            << format_double(double(correct) / double(subset.size())) << "\n";
  if (!labels.empty()) std::cout << "gamma " << format_double(contamination_gamma(subset, labels)) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string mode = "ranking";
  std::string responses;
  std::string labels;
  std::string ground_truth;
  std::vector<std::string> methods{"random", "irt", "mirt", "m2irt", "m3irt"};
  std::vector<double> fractions = default_fractions();
  std::vector<double> levels{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::size_t replicas = 0;  // 24 for ranking, 10 for prediction
  std::string estimator = "imputed";
  std::string format = "11";
  std::vector<double> q_grid;
  FitFlags fit;
};

int run_evaluate(const CLI::App& app, const Common& c, const EvaluateArgs& a) {
  FitConfig cfg = resolve_fit(a.fit, 0);
  if (a.mode == "ranking") {
    if (a.responses.empty() || a.labels.empty())
      throw ValidationError("ranking mode needs --responses and --labels");
    auto tensor = load_responses(a.responses);
    auto labels = load_item_labels(a.labels);
    RankingOptions opt;
    opt.methods.clear();
    for (const auto& name : a.methods) opt.methods.push_back(parse_method(name));
    opt.fractions = a.fractions;
    opt.replicas = a.replicas ? a.replicas : 24;
    opt.seed = c.seed;
    opt.fit = cfg;
    opt.format = parse_format(a.format);
    opt.estimator = parse_estimator(a.estimator);
    opt.jobs = c.jobs;
    auto report = ranking_experiment(tensor, labels, opt);

    Outputs out(c.out_dir);
    {
      auto f = out.open("ranking_spearman.csv");
      write_ranking_csv(f, report, RankingMetric::Spearman);
    }
    {
      auto f = out.open("ranking_gamma.csv");
      write_ranking_csv(f, report, RankingMetric::Gamma);
    }
    out.open("ranking.json") << to_json(report).dump(2) << '\n';
    write_resolved_config(out, app);
    out.write_manifest("evaluate");
    for (const auto& row : report.rows) {
      if (row.fraction != report.fractions.front() && row.fraction != 0.1) continue;
      std::cout << to_string(row.method) << " @" << format_double(row.fraction) << ": spearman "
                << format_double(row.spearman.mean) << " +- " << format_double(row.spearman.std) << ", gamma "
                << format_double(row.gamma.mean) << "\n";
    }
    return 0;
  }
  if (a.ground_truth.empty()) throw ValidationError("prediction mode needs --ground-truth");
  auto gt = load_ground_truth(a.ground_truth);
  PredictionOptions opt;
  opt.family = cfg.family;
  opt.levels = a.levels;
  opt.replicas = a.replicas ? a.replicas : 10;
  opt.seed = c.seed;
  opt.fit = cfg;
  opt.q_grid = a.q_grid;
  opt.jobs = c.jobs;
  auto rows = prediction_experiment(gt, opt);
  Outputs out(c.out_dir);
  {
    auto f = out.open("prediction_auc.csv");
    write_prediction_csv(f, opt.family, rows);
  }
  out.open("prediction.json") << to_json(opt.family, rows).dump(2) << '\n';
  write_resolved_config(out, app);
  out.write_manifest("evaluate");
  for (const auto& r : rows)
    std::cout << "level " << format_double(r.level) << ": AUC " << format_double(r.auc.mean) << " +- "
              << format_double(r.auc.std) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string model;
  std::string cells;
};

int run_predict(const CLI::App& app, const Common& c, const PredictArgs& a) {
  auto m = load_model(a.model);
  auto in = detail::open_input(a.cells);
  std::vector<Cell> cells;
  std::vector<int> observed;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (detail::blank(line)) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), row);
    }
    Cell cell{detail::id_field(obj, "subject", "subject_id", row), detail::id_field(obj, "item", "item_id", row),
              kFullFormat};
    if (obj.contains("s_image") || obj.contains("s_text")) {
      cell.format = FormatIndicator(detail::binary_field(obj.value("s_image", nlohmann::json(1)), "s_image", row),
                                    detail::binary_field(obj.value("s_text", nlohmann::json(1)), "s_text", row));
    }
    if (obj.contains("correct")) observed.push_back(detail::binary_field(obj["correct"], "correct", row));
    cells.push_back(std::move(cell));
  }
  auto probs = predict(m, cells);
  Outputs out(c.out_dir);
  {
    auto f = out.open("predictions.jsonl");
    for (std::size_t k = 0; k < cells.size(); ++k) {
      ordered_json j{{"subject", cells[k].subject},
                     {"item", cells[k].item},
                     {"s_image", cells[k].format.image},
                     {"s_text", cells[k].format.text},
                     {"p", probs[k]}};
      f << j.dump() << '\n';
    }
  }
  write_resolved_config(out, app);
  out.write_manifest("predict");
  std::cout << cells.size() << " predictions";
  if (observed.size() == cells.size() && !cells.empty()) {
    const auto pos = std::count(observed.begin(), observed.end(), 1);
    if (pos > 0 && pos < std::ptrdiff_t(observed.size())) std::cout << ", AUC " << format_double(roc_auc(probs, observed));
  }
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal item response theory: fitting, decomposition and subset selection"};
  app.set_config("--config", "", "INI/TOML file with option values; flags take precedence");
  app.require_subcommand(1);

  Common common;

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Sample a synthetic contaminated benchmark");
  add_common(simulate, common);
  simulate->add_option("--subjects", sim.subjects)->capture_default_str();
  simulate->add_option("--items", sim.items, "Clean items before contamination")->capture_default_str();
  simulate->add_option("--q", sim.q)->capture_default_str();
  simulate->add_option("--contamination", sim.contamination, "Final low-quality fraction")->capture_default_str();
  simulate->add_option("--mix", sim.mix, "Proportions of low-quality types A,B,C")->delimiter(',')->expected(3);
  simulate->add_option("--formats", sim.formats, "Formats to sample, e.g. 00,01,10,11")->delimiter(',');
  simulate->add_option("--density", sim.density, "Kept fraction of cells")->capture_default_str();
  simulate->add_option("--convention", sim.convention)
      ->check(CLI::IsMember({"corrected", "as_written"}))
      ->capture_default_str();
  simulate->add_option("--ranges", sim.ranges, "default or wide parameter ranges")
      ->check(CLI::IsMember({"default", "wide"}))
      ->capture_default_str();
  simulate->add_option("--kernel", sim.kernel, "Generating kernel: m2irt or m3irt")
      ->check(CLI::IsMember({"m2irt", "m3irt"}))
      ->capture_default_str();
  simulate->add_option("--n-choices", sim.n_choices)->capture_default_str();

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model with a grid search over q");
  add_common(fit_cmd, common);
  fit_cmd->add_option("--responses", fa.responses)->required()->check(CLI::ExistingFile);
  add_fit_flags(fit_cmd, fa.fit);
  fit_cmd->add_option("--q-grid", fa.q_grid)->delimiter(',');
  fit_cmd->add_option("--val-fraction", fa.val_fraction)->capture_default_str();
  fit_cmd->add_option("--test-fraction", fa.test_fraction)->capture_default_str();

  DecomposeArgs da;
  auto* decompose = app.add_subcommand("decompose", "Per-component ability and difficulty tables");
  add_common(decompose, common);
  decompose->add_option("--model", da.model)->required()->check(CLI::ExistingFile);
  decompose->add_option("--top-k", da.top_k, "Items listed per side by cross-modal difficulty")->capture_default_str();

  SelectArgs sa;
  auto* select = app.add_subcommand("select", "Adaptive subset selection against recorded responses");
  add_common(select, common);
  select->add_option("--model", sa.model)->required()->check(CLI::ExistingFile);
  select->add_option("--responses", sa.responses)->required()->check(CLI::ExistingFile);
  select->add_option("--labels", sa.labels)->check(CLI::ExistingFile);
  select->add_option("--subject", sa.subject)->required();
  select->add_option("--budget", sa.budget, "Number of items to select");
  select->add_option("--fraction", sa.fraction, "Budget as a fraction of the pool");
  select->add_option("--criterion", sa.criterion)
      ->check(CLI::IsMember({"maxinfo", "doptimal"}))
      ->capture_default_str();
  select->add_option("--format", sa.format)->capture_default_str();

  EvaluateArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "Subset ranking or held-out prediction experiment");
  add_common(evaluate, common);
  evaluate->add_option("--mode", ea.mode)->check(CLI::IsMember({"ranking", "prediction"}))->capture_default_str();
  evaluate->add_option("--responses", ea.responses)->check(CLI::ExistingFile);
  evaluate->add_option("--labels", ea.labels)->check(CLI::ExistingFile);
  evaluate->add_option("--ground-truth", ea.ground_truth)->check(CLI::ExistingFile);
  evaluate->add_option("--methods", ea.methods)
      ->delimiter(',')
      ->check(CLI::IsMember({"random", "irt", "mirt", "m2irt", "m3irt"}));
  evaluate->add_option("--fractions", ea.fractions, "Subset fractions (default 0.01..0.50)")->delimiter(',');
  evaluate->add_option("--levels", ea.levels, "Contamination levels for prediction mode")->delimiter(',');
  evaluate->add_option("--replicas", ea.replicas, "Default 24 (ranking) or 10 (prediction)");
  evaluate->add_option("--estimator", ea.estimator)
      ->check(CLI::IsMember({"imputed", "model", "subset"}))
      ->capture_default_str();
  evaluate->add_option("--format", ea.format)->capture_default_str();
  evaluate->add_option("--q-grid", ea.q_grid, "Prediction mode: grid-search q per replica")->delimiter(',');
  add_fit_flags(evaluate, ea.fit);

  PredictArgs pa;
  auto* predict_cmd = app.add_subcommand("predict", "Success probabilities for listed cells");
  add_common(predict_cmd, common);
  predict_cmd->add_option("--model", pa.model)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--cells", pa.cells)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*simulate) return run_simulate(*simulate, common, sim);
    if (*fit_cmd) return run_fit(*fit_cmd, common, fa);
    if (*decompose) return run_decompose(*decompose, common, da);
    if (*select) return run_select(*select, common, sa);
    if (*evaluate) return run_evaluate(*evaluate, common, ea);
    if (*predict_cmd) return run_predict(*predict_cmd, common, pa);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
