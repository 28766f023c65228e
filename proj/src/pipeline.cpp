#include "sociolex/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "sociolex/association.hpp"
#include "sociolex/corpus.hpp"
#include "sociolex/csv.hpp"
#include "sociolex/digest.hpp"
#include "sociolex/error.hpp"
#include "sociolex/eventstudy.hpp"
#include "sociolex/rng.hpp"
#include "sociolex/stats.hpp"
#include "sociolex/svgplot.hpp"
#include "sociolex/tokenize.hpp"
#include "sociolex/variables.hpp"

namespace sociolex {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string resolve(const std::string& base_dir, const std::string& path) {
  fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return path;
  return (fs::path(base_dir) / p).lexically_normal().string();
}

void require_file(const std::string& path, const std::string& field) {
  if (!fs::exists(path)) {
    throw ValidationError("config field '" + field + "': file does not exist: " + path);
  }
}

bool safe_name(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

RateTarget parse_target(const ordered_json& j, const std::string& field) {
  if (!j.is_object()) {
    throw ValidationError("config field '" + field +
                          "': expected an object like {\"variant\": ...}");
  }
  if (j.contains("variant")) return RateTarget::variant(j["variant"].get<std::string>());
  if (j.contains("variants")) {
    std::vector<std::string> v = j["variants"].get<std::vector<std::string>>();
    return RateTarget::any_of(std::move(v));
  }
  if (j.contains("gender")) {
    return RateTarget::gender(gender_from_string(j["gender"].get<std::string>()));
  }
  throw ValidationError("config field '" + field +
                        "': expected one of variant|variants|gender");
}

OccurrenceFilter parse_filter(const ordered_json& j, const std::string& field) {
  OccurrenceFilter f;
  if (j.is_null()) return f;
  if (!j.is_object()) throw ValidationError("config field '" + field + "': not an object");
  if (j.contains("perspectives")) {
    for (const auto& p : j["perspectives"]) {
      f.perspectives.push_back(perspective_from_string(p.get<std::string>()));
    }
  }
  if (j.contains("labels")) {
    f.require_labels = j["labels"].get<std::vector<std::string>>();
  }
  if (j.contains("community")) f.community = j["community"].get<std::string>();
  if (j.contains("state")) f.state = j["state"].get<std::string>();
  if (j.contains("months")) {
    const auto arr = j["months"].get<std::vector<std::string>>();
    if (arr.size() != 2) {
      throw ValidationError("config field '" + field + ".months': expected [from, to]");
    }
    f.month_min = parse_year_month(arr[0]);
    f.month_max = parse_year_month(arr[1]);
  }
  return f;
}

struct Artifact {
  std::string path;      // relative to the output directory
  std::string analysis;  // producing analysis name
};

struct AnalysisRecord {
  std::string name;
  std::string kind;
  std::string status = "ok";
  std::string error;
};

struct Context {
  fs::path out_dir;
  std::vector<Occurrence> occurrences;
  std::map<std::string, RateSeries> series_by_name;
  std::vector<Artifact> artifacts;
  std::vector<Message> messages;  // kept only when a shift analysis needs text
  int threads = 1;
};

void emit(Context& ctx, const std::string& analysis, const std::string& rel_path,
          const std::string& content) {
  write_file_atomic((ctx.out_dir / rel_path).string(), content);
  ctx.artifacts.push_back(Artifact{rel_path, analysis});
}

std::string rates_csv(const RateSeries& s) {
  std::ostringstream out;
  out << "bucket,p,ci_low,ci_high,n\n";
  for (const auto& pt : s.points) {
    csv::write_row(out, {pt.bucket.label(), csv::fmt(pt.p), csv::fmt(pt.ci_low),
                         csv::fmt(pt.ci_high), csv::fmt(static_cast<std::uint64_t>(pt.n))});
  }
  return out.str();
}

ordered_json rates_report(const RateSeries& s, const RateTarget& target) {
  ordered_json rep;
  rep["target"] = target.label();
  rep["granularity"] = to_string(s.granularity);
  ordered_json pts = ordered_json::array();
  for (const auto& pt : s.points) {
    pts.push_back({{"bucket", pt.bucket.label()},
                   {"p", pt.p},
                   {"ci_low", pt.ci_low},
                   {"ci_high", pt.ci_high},
                   {"boot_mean", pt.boot_mean},
                   {"n", pt.n}});
  }
  rep["points"] = std::move(pts);
  ordered_json omitted = ordered_json::array();
  for (const auto& [bucket, n] : s.omitted) {
    omitted.push_back({{"bucket", bucket.label()}, {"n", n}});
  }
  rep["omitted_buckets"] = std::move(omitted);
  return rep;
}

void run_rates(Context& ctx, const ordered_json& a) {
  const std::string name = a.at("name").get<std::string>();
  const auto target = parse_target(a.at("target"), name + ".target");
  const auto series = rate_series(
      ctx.occurrences, a.at("variable").get<std::string>(), target,
      granularity_from_string(a.at("granularity").get<std::string>()),
      a.at("min_n").get<std::uint64_t>(), a.at("bootstrap_iters").get<int>(),
      a.at("seed").get<std::uint64_t>(),
      parse_filter(a.contains("filter") ? a["filter"] : ordered_json(), name + ".filter"));
  ctx.series_by_name[name] = series;
  emit(ctx, name, name + ".csv", rates_csv(series));
  emit(ctx, name, name + ".json", rates_report(series, target).dump(2) + "\n");
  if (a.value("plot", false)) {
    std::vector<PlotPoint> pts;
    for (const auto& p : series.points) {
      pts.push_back(PlotPoint{static_cast<double>(p.bucket.index), p.p, p.ci_low,
                              p.ci_high, p.bucket.label()});
    }
    emit(ctx, name, name + ".svg",
         render_band_plot(name, "P(" + target.label() + ")", pts));
  }
}

void run_trend(Context& ctx, const ordered_json& a) {
  const std::string name = a.at("name").get<std::string>();
  const std::string series_name = a.at("series").get<std::string>();
  auto it = ctx.series_by_name.find(series_name);
  if (it == ctx.series_by_name.end()) {
    throw AnalysisError("trend '" + name + "' references unknown rates analysis '" +
                        series_name + "'");
  }
  const bool boot = a.value("use_bootstrap_means", false);
  const auto trend = pearson_trend(it->second, boot);
  ordered_json rep;
  rep["series"] = series_name;
  rep["use_bootstrap_means"] = boot;
  rep["r"] = trend.r;
  rep["p_value"] = trend.p_value;
  rep["n"] = trend.n;
  emit(ctx, name, name + ".json", rep.dump(2) + "\n");
}

std::string groups_csv(const std::vector<GroupStat>& groups) {
  std::ostringstream out;
  out << "group,mean,ci_low,ci_high,n_communities\n";
  for (const auto& g : groups) {
    csv::write_row(out, {g.group, csv::fmt(g.mean), csv::fmt(g.ci_low),
                         csv::fmt(g.ci_high),
                         csv::fmt(static_cast<std::uint64_t>(g.n_communities))});
  }
  return out.str();
}

void run_groups(Context& ctx, const ordered_json& a) {
  const std::string name = a.at("name").get<std::string>();
  const auto target = parse_target(a.at("target"), name + ".target");
  const std::string variable = a.at("variable").get<std::string>();
  const auto filter =
      parse_filter(a.contains("filter") ? a["filter"] : ordered_json(), name + ".filter");
  const int iters = a.at("bootstrap_iters").get<int>();
  const auto seed = a.at("seed").get<std::uint64_t>();
  const auto& by = a.at("by");
  ordered_json rep;
  rep["target"] = target.label();
  if (by.contains("label_category")) {
    const auto groups = compare_label_groups(
        ctx.occurrences, variable, target, by["label_category"].get<std::string>(),
        iters, seed, filter);
    emit(ctx, name, name + ".csv", groups_csv(groups));
    ordered_json out = ordered_json::array();
    for (const auto& g : groups) {
      out.push_back({{"group", g.group},
                     {"mean", g.mean},
                     {"ci_low", g.ci_low},
                     {"ci_high", g.ci_high},
                     {"n_communities", g.n_communities}});
    }
    rep["groups"] = std::move(out);
  } else if (by.contains("quartile_attribute")) {
    const auto cmp = compare_quartile_groups(
        ctx.occurrences, variable, target, by["quartile_attribute"].get<std::string>(),
        iters, seed, filter);
    emit(ctx, name, name + ".csv", groups_csv(cmp.groups));
    ordered_json out = ordered_json::array();
    for (const auto& g : cmp.groups) {
      out.push_back({{"group", g.group},
                     {"mean", g.mean},
                     {"ci_low", g.ci_low},
                     {"ci_high", g.ci_high},
                     {"n_communities", g.n_communities}});
    }
    rep["groups"] = std::move(out);
    rep["breakpoints"] = cmp.assignment.breakpoints;
    rep["ks_top_vs_bottom"] = {{"d", cmp.ks_top_vs_bottom.d},
                               {"p_value", cmp.ks_top_vs_bottom.p_value}};
  } else {
    throw ValidationError("groups '" + name +
                          "': 'by' needs label_category or quartile_attribute");
  }
  emit(ctx, name, name + ".json", rep.dump(2) + "\n");
}

void run_did(Context& ctx, const ordered_json& a) {
  const std::string name = a.at("name").get<std::string>();
  const auto treatments = TreatmentTable::load_csv(a.at("treatments").get<std::string>());
  PanelOptions opts;
  opts.variable = a.at("variable").get<std::string>();
  if (a.contains("conditioning")) {
    opts.conditioning = a["conditioning"].get<std::vector<std::string>>();
  }
  if (a.contains("window")) {
    const auto w = a["window"].get<std::vector<int>>();
    if (w.size() != 2) throw ValidationError("did '" + name + "': window must be [pre, post]");
    opts.window_pre = w[0];
    opts.window_post = w[1];
  }
  opts.min_n = a.at("min_n").get<std::uint64_t>();
  const auto panel = build_panel(ctx.occurrences, treatments,
                                 a.at("target").get<std::string>(), opts);
  DesignOptions dopts;
  dopts.weight_by_n = a.value("weight_by_n", false);
  const auto design = build_design(panel.rows, dopts);
  const auto fit = fit_event_study(design);

  std::ostringstream coef;
  coef << "coef,estimate,se\n";
  for (const auto& c : fit.coefficients) {
    csv::write_row(coef, {c.label, csv::fmt(c.estimate), csv::fmt(c.se)});
  }
  emit(ctx, name, name + ".csv", coef.str());

  ordered_json rep;
  rep["target"] = panel.target;
  rep["rows"] = fit.rows;
  rep["cols"] = fit.cols;
  rep["sigma2"] = fit.sigma2;
  rep["dropped_cells"] = panel.dropped_cells;
  rep["warnings"] = fit.warnings;
  emit(ctx, name, name + ".json", rep.dump(2) + "\n");

  if (a.value("plot", true)) {
    std::vector<PlotPoint> pts;
    // reference period at zero
    for (const auto& c : fit.relative_month_coefs()) {
      if (c.rel_month == 1) {
        pts.push_back(PlotPoint{0.0, 0.0, 0.0, 0.0, "0"});
      }
      pts.push_back(PlotPoint{static_cast<double>(c.rel_month), c.estimate,
                              c.estimate - c.se, c.estimate + c.se,
                              std::to_string(c.rel_month)});
    }
    std::sort(pts.begin(), pts.end(),
              [](const PlotPoint& x, const PlotPoint& y) { return x.x < y.x; });
    emit(ctx, name, name + ".svg",
         render_band_plot("effect of treatment on " + panel.target,
                          "coefficient (rate)", pts));
  }
}

void run_shift(Context& ctx, const ordered_json& a) {
  const std::string name = a.at("name").get<std::string>();
  const auto poles = PoleSets::load(a.at("poles").get<std::string>());
  const std::string target = a.at("target").get<std::string>();

  SeriesParams params;
  params.runs = a.at("runs").get<int>();
  params.bootstrap_iters = a.at("bootstrap_iters").get<int>();
  params.threads = ctx.threads;
  if (a.value("ci_mode", "runs") == std::string("pole_words")) {
    params.ci_mode = CiMode::pole_words;
  }
  auto& t = params.train;
  t.dim = a.at("dim").get<int>();
  t.window = a.at("window").get<int>();
  t.negatives = a.at("negatives").get<int>();
  t.min_count = a.at("min_count").get<int>();
  t.epochs = a.at("epochs").get<int>();
  t.subsample = a.at("subsample").get<double>();
  t.min_tokens = a.at("min_tokens").get<std::uint64_t>();

  std::set<std::string> wanted;
  if (a.contains("periods")) {
    for (const auto& p : a["periods"]) wanted.insert(p.get<std::string>());
  }
  std::map<std::string, Sentences> per_period;
  for (const auto& m : ctx.messages) {
    const std::string year = time_bucket(m.ts, Granularity::year).label();
    if (!wanted.empty() && !wanted.count(year)) continue;
    per_period[year].push_back(tokenize(m.text));
  }
  if (per_period.size() < 2) {
    throw AnalysisError("shift '" + name + "': need at least 2 periods with data, got " +
                        std::to_string(per_period.size()));
  }

  const auto series = association_series(per_period, target, poles, params,
                                         a.at("seed").get<std::uint64_t>());

  std::ostringstream out;
  out << "year,target,diff,ci_low,ci_high\n";
  for (const auto& pt : series) {
    csv::write_row(out, {pt.period, target, csv::fmt(pt.difference),
                         csv::fmt(pt.ci_low), csv::fmt(pt.ci_high)});
  }
  emit(ctx, name, name + ".csv", out.str());

  // Anchor stability across sequential periods, over one full space per
  // period (first split's seed stream, trained on the whole period slice).
  if (a.value("anchors", true)) {
    std::vector<std::string> anchor_words = poles.male;
    anchor_words.insert(anchor_words.end(), poles.female.begin(), poles.female.end());
    std::map<std::string, EmbeddingSpace> spaces;
    std::size_t idx = 0;
    for (const auto& [period, sentences] : per_period) {
      spaces.emplace(period,
                     train_embeddings(sentences, params.train,
                                      Rng(a.at("seed").get<std::uint64_t>()).fork(0xacc0 + idx).next_u64(),
                                      period));
      ++idx;
    }
    std::vector<AnchorRow> rows;
    const EmbeddingSpace* prev = nullptr;
    std::string prev_period;
    for (const auto& [period, space] : spaces) {
      if (prev) {
        const auto report = anchor_stability(*prev, space, anchor_words);
        for (const auto& ac : report.anchors) {
          rows.push_back(AnchorRow{ac.word, prev_period + "-" + period, ac.cosine});
        }
      }
      prev = &space;
      prev_period = period;
    }
    std::ostringstream anchors_csv;
    anchors_csv << "word,year_pair,cosine\n";
    for (const auto& r : rows) {
      csv::write_row(anchors_csv, {r.word, r.year_pair, csv::fmt(r.cosine)});
    }
    emit(ctx, name, name + "_anchors.csv", anchors_csv.str());
  }

  if (a.value("plot", true)) {
    std::vector<PlotPoint> pts;
    for (const auto& pt : series) {
      pts.push_back(PlotPoint{static_cast<double>(std::stoi(pt.period)), pt.difference,
                              pt.ci_low, pt.ci_high, pt.period});
    }
    emit(ctx, name, name + ".svg",
         render_band_plot("gender association of '" + target + "'",
                          "mean-cosine difference", pts));
  }
}

}  // namespace

int configured_threads() {
  const char* env = std::getenv("SOCIOLEX_THREADS");
  if (!env) return 1;
  const int v = std::atoi(env);
  return v >= 1 ? v : 1;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config: " + path);
  ordered_json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config " + path + ": " + e.what());
  }
  return from_json(doc, fs::path(path).parent_path().string());
}

RunConfig RunConfig::from_json(const ordered_json& doc, const std::string& base_dir) {
  if (!doc.is_object()) throw ValidationError("config: root is not an object");
  ordered_json norm;

  if (!doc.contains("inputs") || !doc["inputs"].is_array() || doc["inputs"].empty()) {
    throw ValidationError("config field 'inputs': need a non-empty list of JSONL paths");
  }
  std::vector<std::string> inputs;
  for (const auto& p : doc["inputs"]) {
    const auto q = resolve(base_dir, p.get<std::string>());
    require_file(q, "inputs");
    inputs.push_back(q);
  }
  norm["inputs"] = inputs;

  if (!doc.contains("variables") || !doc["variables"].is_array() || doc["variables"].empty()) {
    throw ValidationError("config field 'variables': need at least one variable spec path");
  }
  std::vector<std::string> variables;
  for (const auto& p : doc["variables"]) {
    const auto q = resolve(base_dir, p.get<std::string>());
    require_file(q, "variables");
    variables.push_back(q);
  }
  norm["variables"] = variables;

  if (doc.contains("label_map") && !doc["label_map"].is_null()) {
    const auto q = resolve(base_dir, doc["label_map"].get<std::string>());
    require_file(q, "label_map");
    norm["label_map"] = q;
  } else {
    norm["label_map"] = nullptr;
  }

  if (!doc.contains("output_dir")) {
    throw ValidationError("config field 'output_dir' is required");
  }
  norm["output_dir"] = resolve(base_dir, doc["output_dir"].get<std::string>());

  norm["seed"] = doc.value("seed", std::uint64_t{42});
  norm["bootstrap_iters"] = doc.value("bootstrap_iters", 1000);
  norm["strict_ingest"] = doc.value("strict_ingest", false);

  if (!doc.contains("analyses") || !doc["analyses"].is_array()) {
    throw ValidationError("config field 'analyses': need a list");
  }
  const std::uint64_t seed = norm["seed"].get<std::uint64_t>();
  const int iters = norm["bootstrap_iters"].get<int>();
  std::set<std::string> names;
  ordered_json analyses = ordered_json::array();
  for (const auto& a : doc["analyses"]) {
    if (!a.is_object() || !a.contains("kind")) {
      throw ValidationError("config field 'analyses': every block needs a 'kind'");
    }
    const std::string kind = a["kind"].get<std::string>();
    ordered_json b = a;
    if (!b.contains("name")) b["name"] = kind;
    const std::string name = b["name"].get<std::string>();
    if (!safe_name(name)) {
      throw ValidationError("analysis name '" + name + "' must be [A-Za-z0-9_-]+");
    }
    if (!names.insert(name).second) {
      throw ValidationError("duplicate analysis name '" + name + "'");
    }
    if (!b.contains("seed")) b["seed"] = seed;
    if (!b.contains("bootstrap_iters")) b["bootstrap_iters"] = iters;
    if (kind == "rates") {
      if (!b.contains("variable")) throw ValidationError("rates '" + name + "': missing 'variable'");
      if (!b.contains("target")) throw ValidationError("rates '" + name + "': missing 'target'");
      if (!b.contains("granularity")) b["granularity"] = "quarter";
      if (!b.contains("min_n")) b["min_n"] = 30;
    } else if (kind == "trend") {
      if (!b.contains("series")) throw ValidationError("trend '" + name + "': missing 'series'");
    } else if (kind == "groups") {
      for (const char* f : {"variable", "target", "by"}) {
        if (!b.contains(f)) {
          throw ValidationError("groups '" + name + "': missing '" + std::string(f) + "'");
        }
      }
    } else if (kind == "did") {
      for (const char* f : {"target", "treatments"}) {
        if (!b.contains(f)) {
          throw ValidationError("did '" + name + "': missing '" + std::string(f) + "'");
        }
      }
      b["treatments"] = resolve(base_dir, b["treatments"].get<std::string>());
      require_file(b["treatments"].get<std::string>(), name + ".treatments");
      if (!b.contains("variable")) b["variable"] = "SigOther";
      if (!b.contains("min_n")) b["min_n"] = 20;
      if (!b.contains("window")) b["window"] = std::vector<int>{-12, 12};
    } else if (kind == "shift") {
      for (const char* f : {"target", "poles"}) {
        if (!b.contains(f)) {
          throw ValidationError("shift '" + name + "': missing '" + std::string(f) + "'");
        }
      }
      b["poles"] = resolve(base_dir, b["poles"].get<std::string>());
      require_file(b["poles"].get<std::string>(), name + ".poles");
      if (!b.contains("runs")) b["runs"] = 5;
      if (!b.contains("dim")) b["dim"] = 300;
      if (!b.contains("window")) b["window"] = 5;
      if (!b.contains("negatives")) b["negatives"] = 5;
      if (!b.contains("min_count")) b["min_count"] = 5;
      if (!b.contains("epochs")) b["epochs"] = 15;
      if (!b.contains("subsample")) b["subsample"] = 1e-3;
      if (!b.contains("min_tokens")) b["min_tokens"] = 1'000'000;
      if (!b.contains("ci_mode")) b["ci_mode"] = "runs";
    } else {
      throw ValidationError("unknown analysis kind '" + kind + "'");
    }
    analyses.push_back(std::move(b));
  }
  norm["analyses"] = std::move(analyses);

  RunConfig cfg;
  cfg.doc_ = std::move(norm);
  return cfg;
}

std::string RunConfig::serialized() const { return doc_.dump(2) + "\n"; }

int run_pipeline(const RunConfig& config, std::ostream& log) {
  const auto& cfg = config.normalized();
  Context ctx;
  ctx.out_dir = cfg.at("output_dir").get<std::string>();
  ctx.threads = configured_threads();
  fs::create_directories(ctx.out_dir);

  // Input and spec checksums drive the extraction cache key.
  ordered_json manifest;
  manifest["tool"] = "sociolex";
  manifest["version"] = kToolVersion;
  const std::string cfg_text = config.serialized();
  manifest["config_sha256"] = sha256_hex(cfg_text);
  manifest["config"] = cfg;

  std::string cache_key;
  ordered_json inputs_json = ordered_json::array();
  for (const auto& p : cfg.at("inputs")) {
    const auto h = sha256_file_hex(p.get<std::string>());
    inputs_json.push_back({{"path", p.get<std::string>()}, {"sha256", h}});
    cache_key += h;
  }
  std::vector<VariableSpec> specs;
  for (const auto& p : cfg.at("variables")) {
    cache_key += sha256_file_hex(p.get<std::string>());
    specs.push_back(VariableSpec::load(p.get<std::string>()));
  }
  std::optional<LabelMap> label_map;
  if (!cfg.at("label_map").is_null()) {
    const auto lm_path = cfg.at("label_map").get<std::string>();
    cache_key += sha256_file_hex(lm_path);
    label_map = LabelMap::load(lm_path);
  }
  cache_key = sha256_hex(cache_key);
  manifest["inputs"] = std::move(inputs_json);

  bool needs_memory_extras = false;  // community/demographics survive only in-process
  bool needs_messages = false;
  for (const auto& a : cfg.at("analyses")) {
    const auto kind = a.at("kind").get<std::string>();
    if (kind == "groups") needs_memory_extras = true;
    if (kind == "shift") needs_messages = true;
  }

  const fs::path occ_path = ctx.out_dir / "occurrences.csv";
  const fs::path key_path = ctx.out_dir / "occurrences.cachekey";
  bool cached = false;
  if (!needs_memory_extras && !needs_messages && fs::exists(occ_path) && fs::exists(key_path)) {
    std::ifstream k(key_path);
    std::string existing;
    k >> existing;
    if (existing == cache_key) cached = true;
  }

  ordered_json extraction;
  if (cached) {
    ctx.occurrences = read_occurrences_csv(occ_path.string());
    extraction["status"] = "cached";
    extraction["occurrences"] = ctx.occurrences.size();
    log << "extraction: reused cached occurrences.csv (" << ctx.occurrences.size()
        << " occurrences)\n";
  } else {
    JsonlReader::Options opts;
    opts.strict = cfg.at("strict_ingest").get<bool>();
    opts.label_map = label_map ? &*label_map : nullptr;
    std::uint64_t messages = 0, rejects = 0, lines = 0;
    for (const auto& p : cfg.at("inputs")) {
      JsonlReader reader(p.get<std::string>(), opts);
      while (auto m = reader.next()) {
        if (needs_messages) ctx.messages.push_back(*m);
        ++messages;
        std::vector<Message> one{std::move(*m)};
        auto occs = extract_occurrences(one, specs, 1);
        ctx.occurrences.insert(ctx.occurrences.end(),
                               std::make_move_iterator(occs.begin()),
                               std::make_move_iterator(occs.end()));
      }
      rejects += reader.rejects();
      lines += reader.lines_read();
    }
    std::ostringstream occ_csv;
    occ_csv << "message_id,variable,variant,gender,precursor,perspective,month,state,labels\n";
    for (const auto& o : ctx.occurrences) {
      std::string labels;
      if (o.labels) {
        for (std::size_t i = 0; i < o.labels->size(); ++i) {
          if (i) labels.push_back(';');
          labels += (*o.labels)[i];
        }
      }
      csv::write_row(occ_csv, {o.message_id, o.variable, o.variant, to_string(o.gender),
                               o.precursor, to_string(o.perspective), month_label(o.month),
                               o.state.value_or(""), labels});
    }
    write_file_atomic(occ_path.string(), occ_csv.str());
    write_file_atomic(key_path.string(), cache_key + "\n");
    extraction["status"] = "computed";
    extraction["lines"] = lines;
    extraction["messages"] = messages;
    extraction["rejects"] = rejects;
    extraction["occurrences"] = ctx.occurrences.size();
    log << "extraction: " << ctx.occurrences.size() << " occurrences from " << messages
        << " messages (" << rejects << " rejected lines)\n";
  }
  ctx.artifacts.push_back(Artifact{"occurrences.csv", "extract"});

  std::vector<AnalysisRecord> records;
  bool any_failed = false;
  for (const auto& a : cfg.at("analyses")) {
    AnalysisRecord rec;
    rec.name = a.at("name").get<std::string>();
    rec.kind = a.at("kind").get<std::string>();
    try {
      if (rec.kind == "rates") run_rates(ctx, a);
      else if (rec.kind == "trend") run_trend(ctx, a);
      else if (rec.kind == "groups") run_groups(ctx, a);
      else if (rec.kind == "did") run_did(ctx, a);
      else if (rec.kind == "shift") run_shift(ctx, a);
      log << "analysis " << rec.name << ": ok\n";
    } catch (const Error& e) {
      rec.status = "failed";
      rec.error = e.what();
      any_failed = true;
      log << "analysis " << rec.name << ": FAILED: " << e.what() << "\n";
    }
    records.push_back(std::move(rec));
  }

  manifest["extraction"] = std::move(extraction);
  ordered_json recs = ordered_json::array();
  for (const auto& r : records) {
    ordered_json j{{"name", r.name}, {"kind", r.kind}, {"status", r.status}};
    if (!r.error.empty()) j["error"] = r.error;
    recs.push_back(std::move(j));
  }
  manifest["analyses"] = std::move(recs);

  ordered_json artifacts = ordered_json::array();
  for (const auto& art : ctx.artifacts) {
    artifacts.push_back({{"path", art.path},
                         {"analysis", art.analysis},
                         {"sha256", sha256_file_hex((ctx.out_dir / art.path).string())}});
  }
  manifest["artifacts"] = std::move(artifacts);
  write_file_atomic((ctx.out_dir / "manifest.json").string(), manifest.dump(2) + "\n");

  return any_failed ? kExitAnalysisFailure : kExitOk;
}

}  // namespace sociolex
