// Command-line front end: run a declarative analysis config or drive one
// analysis directly. Exit codes: 0 success, 1 analysis failure, 2 validation
// failure.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sociolex/association.hpp"
#include "sociolex/corpus.hpp"
#include "sociolex/csv.hpp"
#include "sociolex/digest.hpp"
#include "sociolex/error.hpp"
#include "sociolex/eventstudy.hpp"
#include "sociolex/kernels.hpp"
#include "sociolex/pipeline.hpp"
#include "sociolex/rng.hpp"
#include "sociolex/stats.hpp"
#include "sociolex/svgplot.hpp"
#include "sociolex/tokenize.hpp"
#include "sociolex/variables.hpp"

namespace sx = sociolex;

namespace {

sx::RateTarget target_from_string(const std::string& s) {
  if (s.rfind("gender:", 0) == 0) {
    return sx::RateTarget::gender(sx::gender_from_string(s.substr(7)));
  }
  if (s.find('|') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, '|')) parts.push_back(item);
    return sx::RateTarget::any_of(parts);
  }
  return sx::RateTarget::variant(s);
}

sx::RateSeries series_from_csv(const std::string& path) {
  const auto rows = sx::csv::read_rows(path);
  if (rows.size() < 2 || rows[0].size() < 5 || rows[0][0] != "bucket") {
    throw sx::ValidationError(path + ": not a rates CSV (bucket,p,ci_low,ci_high,n)");
  }
  sx::RateSeries series;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    sx::RatePoint pt;
    pt.bucket = sx::parse_bucket_label(rows[i][0]);
    pt.p = std::stod(rows[i][1]);
    pt.ci_low = std::stod(rows[i][2]);
    pt.ci_high = std::stod(rows[i][3]);
    pt.n = std::stoull(rows[i][4]);
    pt.boot_mean = pt.p;
    series.granularity = pt.bucket.granularity;
    series.points.push_back(pt);
  }
  return series;
}

std::vector<sx::Occurrence> occurrences_from_args(const std::string& occ_csv) {
  return sx::read_occurrences_csv(occ_csv);
}

int cmd_extract(const std::vector<std::string>& inputs,
                const std::vector<std::string>& spec_paths,
                const std::string& label_map_path, const std::string& out,
                bool strict) {
  std::vector<sx::VariableSpec> specs;
  for (const auto& p : spec_paths) specs.push_back(sx::VariableSpec::load(p));
  std::optional<sx::LabelMap> lm;
  if (!label_map_path.empty()) lm = sx::LabelMap::load(label_map_path);

  std::vector<sx::Occurrence> occs;
  std::uint64_t messages = 0, rejects = 0;
  for (const auto& input : inputs) {
    sx::JsonlReader::Options opts;
    opts.strict = strict;
    opts.label_map = lm ? &*lm : nullptr;
    sx::JsonlReader reader(input, opts);
    sx::extract_occurrences(reader, specs,
                            [&](sx::Occurrence&& o) { occs.push_back(std::move(o)); },
                            sx::configured_threads());
    messages += reader.yielded();
    rejects += reader.rejects();
  }
  sx::write_occurrences_csv(out, occs);
  std::cerr << "extracted " << occs.size() << " occurrences from " << messages
            << " messages (" << rejects << " rejected lines) -> " << out << "\n";
  return sx::kExitOk;
}

std::string rates_csv_text(const sx::RateSeries& series) {
  std::ostringstream out;
  out << "bucket,p,ci_low,ci_high,n\n";
  for (const auto& pt : series.points) {
    sx::csv::write_row(out, {pt.bucket.label(), sx::csv::fmt(pt.p),
                             sx::csv::fmt(pt.ci_low), sx::csv::fmt(pt.ci_high),
                             sx::csv::fmt(static_cast<std::uint64_t>(pt.n))});
  }
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sociolex: lexical-variable analytics over labeled social-media corpora"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "execute a JSON run configuration");
  std::string run_config;
  std::optional<std::string> run_outdir;
  std::optional<std::uint64_t> run_seed;
  run->add_option("--config", run_config, "run configuration JSON")->required();
  run->add_option("--output-dir", run_outdir, "override the config's output_dir");
  run->add_option("--seed", run_seed, "override the config's seed");

  // extract
  auto* extract = app.add_subcommand("extract", "extract occurrences to CSV");
  std::vector<std::string> ex_inputs, ex_specs;
  std::string ex_label_map, ex_out = "occurrences.csv";
  bool ex_strict = false;
  extract->add_option("--input", ex_inputs, "JSONL corpus file(s)")->required();
  extract->add_option("--spec", ex_specs, "variable spec JSON file(s)")->required();
  extract->add_option("--label-map", ex_label_map, "community label map JSON");
  extract->add_option("--out", ex_out, "output CSV path");
  extract->add_flag("--strict", ex_strict, "abort on the first malformed line");

  // rates
  auto* rates = app.add_subcommand("rates", "per-bucket conditional rates");
  std::string r_occ, r_variable, r_target, r_granularity = "quarter", r_out = "rates.csv";
  std::uint64_t r_min_n = 30, r_seed = 42;
  int r_iters = 1000;
  rates->add_option("--occurrences", r_occ, "occurrence CSV from extract")->required();
  rates->add_option("--variable", r_variable, "variable name")->required();
  rates->add_option("--target", r_target,
                    "variant, variants joined by '|', or gender:<class>")->required();
  rates->add_option("--granularity", r_granularity, "month|quarter|year");
  rates->add_option("--min-n", r_min_n, "minimum occurrences per bucket");
  rates->add_option("--bootstrap-iters", r_iters, "within-bucket bootstrap resamples");
  rates->add_option("--seed", r_seed, "bootstrap seed");
  rates->add_option("--out", r_out, "output CSV path");

  // trend
  auto* trend = app.add_subcommand("trend", "Pearson trend over a rate series");
  std::string t_series;
  trend->add_option("--series", t_series, "rates CSV")->required();

  // did
  auto* did = app.add_subcommand("did", "staggered diff-in-diff event study");
  std::string d_occ, d_treatments, d_target, d_variable = "SigOther";
  std::string d_out = "event_study.csv", d_svg = "event_study.svg";
  std::vector<std::string> d_conditioning;
  std::vector<int> d_window;
  std::uint64_t d_min_n = 20;
  bool d_weight = false, d_all_variants = false, d_no_svg = false;
  did->add_option("--occurrences", d_occ, "occurrence CSV")->required();
  did->add_option("--treatments", d_treatments, "treatment CSV (state,year_month)")->required();
  did->add_option("--target", d_target, "target variant, e.g. partner")->required();
  did->add_option("--variable", d_variable, "variable name");
  did->add_option("--conditioning", d_conditioning,
                  "conditioning variants (default partner spouse wife husband)");
  did->add_flag("--all-variants", d_all_variants,
                "condition on every variant of the variable");
  did->add_option("--window", d_window, "pre post relative-month window")->expected(2);
  did->add_option("--min-n", d_min_n, "minimum occurrences per state-month cell");
  did->add_flag("--weight-by-n", d_weight, "weight cells by occurrence count");
  did->add_option("--out", d_out, "coefficient CSV path");
  did->add_option("--svg", d_svg, "event-study plot path");
  did->add_flag("--no-svg", d_no_svg, "skip the plot");

  // shift
  auto* shift = app.add_subcommand("shift", "diachronic pole-association series");
  std::string s_input, s_target, s_poles, s_out = "shift.csv";
  std::string s_anchors_out = "shift_anchors.csv", s_svg, s_ci_mode = "runs";
  std::vector<std::string> s_periods;
  int s_runs = 5, s_dim = 300, s_window = 5, s_negatives = 5, s_min_count = 5,
      s_epochs = 15, s_iters = 1000;
  double s_subsample = 1e-3;
  std::uint64_t s_min_tokens = 1'000'000, s_seed = 42;
  bool s_no_anchors = false;
  shift->add_option("--input", s_input, "JSONL corpus file")->required();
  shift->add_option("--target", s_target, "target token, e.g. dude")->required();
  shift->add_option("--poles", s_poles, "pole set JSON")->required();
  shift->add_option("--periods", s_periods, "year labels to include (default: all)");
  shift->add_option("--runs", s_runs, "disjoint splits per period");
  shift->add_option("--dim", s_dim, "vector dimensionality");
  shift->add_option("--window", s_window, "context window");
  shift->add_option("--negatives", s_negatives, "negative samples");
  shift->add_option("--min-count", s_min_count, "vocabulary cutoff");
  shift->add_option("--epochs", s_epochs, "training epochs");
  shift->add_option("--subsample", s_subsample, "frequent-word subsample threshold");
  shift->add_option("--min-tokens", s_min_tokens, "minimum tokens per split");
  shift->add_option("--bootstrap-iters", s_iters, "bootstrap resamples for the CI");
  shift->add_option("--ci-mode", s_ci_mode, "runs|pole_words");
  shift->add_option("--seed", s_seed, "training/bootstrap seed");
  shift->add_option("--out", s_out, "association CSV path");
  shift->add_option("--anchors-out", s_anchors_out, "anchor-stability CSV path");
  shift->add_flag("--no-anchors", s_no_anchors, "skip anchor validation");
  shift->add_option("--svg", s_svg, "optional association plot path");

  // report
  auto* report = app.add_subcommand("report", "render SVG plots from result CSVs");
  std::string rp_rates, rp_did, rp_shift, rp_out = "plot.svg";
  report->add_option("--rates", rp_rates, "rates CSV to plot");
  report->add_option("--did", rp_did, "event-study CSV to plot");
  report->add_option("--shift", rp_shift, "association CSV to plot");
  report->add_option("--out", rp_out, "output SVG path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      std::ifstream in(run_config);
      if (!in) throw sx::ValidationError("cannot open config: " + run_config);
      nlohmann::ordered_json doc;
      try {
        in >> doc;
      } catch (const nlohmann::json::exception& e) {
        throw sx::ValidationError("config " + run_config + ": " + e.what());
      }
      if (run_outdir) {
        if (doc.contains("output_dir") && doc["output_dir"] != *run_outdir) {
          std::cerr << "warning: --output-dir overrides config output_dir\n";
        }
        doc["output_dir"] = *run_outdir;
      }
      if (run_seed) {
        if (doc.contains("seed") && doc["seed"] != *run_seed) {
          std::cerr << "warning: --seed overrides config seed\n";
        }
        doc["seed"] = *run_seed;
      }
      const auto cfg = sx::RunConfig::from_json(
          doc, std::filesystem::path(run_config).parent_path().string());
      return sx::run_pipeline(cfg, std::cout);
    }

    if (*extract) {
      return cmd_extract(ex_inputs, ex_specs, ex_label_map, ex_out, ex_strict);
    }

    if (*rates) {
      const auto occs = occurrences_from_args(r_occ);
      const auto series = sx::rate_series(occs, r_variable, target_from_string(r_target),
                                          sx::granularity_from_string(r_granularity),
                                          r_min_n, r_iters, r_seed);
      sx::write_file_atomic(r_out, rates_csv_text(series));
      std::cerr << series.points.size() << " buckets -> " << r_out;
      if (!series.omitted.empty()) {
        std::cerr << " (" << series.omitted.size() << " buckets below min_n omitted)";
      }
      std::cerr << "\n";
      return sx::kExitOk;
    }

    if (*trend) {
      const auto series = series_from_csv(t_series);
      const auto res = sx::pearson_trend(series);
      std::cout << "r=" << sx::csv::fmt(res.r) << ", p=" << sx::csv::fmt(res.p_value)
                << ", n=" << res.n << "\n";
      return sx::kExitOk;
    }

    if (*did) {
      const auto occs = occurrences_from_args(d_occ);
      const auto treatments = sx::TreatmentTable::load_csv(d_treatments);
      sx::PanelOptions opts;
      opts.variable = d_variable;
      if (d_all_variants) opts.conditioning.clear();
      else if (!d_conditioning.empty()) opts.conditioning = d_conditioning;
      if (!d_window.empty()) {
        opts.window_pre = d_window[0];
        opts.window_post = d_window[1];
      }
      opts.min_n = d_min_n;
      const auto panel = sx::build_panel(occs, treatments, d_target, opts);
      sx::DesignOptions dopts;
      dopts.weight_by_n = d_weight;
      const auto design = sx::build_design(panel.rows, dopts);
      for (const auto& w : design.warnings) std::cerr << "warning: " << w << "\n";
      const auto fit = sx::fit_event_study(design);
      sx::write_event_study_csv(d_out, fit);
      if (!d_no_svg) {
        std::vector<sx::PlotPoint> pts;
        pts.push_back(sx::PlotPoint{0.0, 0.0, 0.0, 0.0, "0"});
        for (const auto& c : fit.relative_month_coefs()) {
          pts.push_back(sx::PlotPoint{static_cast<double>(c.rel_month), c.estimate,
                                      c.estimate - c.se, c.estimate + c.se,
                                      std::to_string(c.rel_month)});
        }
        std::sort(pts.begin(), pts.end(),
                  [](const sx::PlotPoint& a, const sx::PlotPoint& b) { return a.x < b.x; });
        sx::write_band_plot(d_svg, "effect of treatment on " + d_target,
                            "coefficient (rate)", pts);
      }
      std::cerr << "fit over " << fit.rows << " cells, " << fit.cols
                << " columns -> " << d_out << "\n";
      return sx::kExitOk;
    }

    if (*shift) {
      const auto poles = sx::PoleSets::load(s_poles);
      const auto messages = sx::read_messages(s_input);
      std::set<std::string> wanted(s_periods.begin(), s_periods.end());
      std::map<std::string, sx::Sentences> per_period;
      for (const auto& m : messages) {
        const auto year = sx::time_bucket(m.ts, sx::Granularity::year).label();
        if (!wanted.empty() && !wanted.count(year)) continue;
        per_period[year].push_back(sx::tokenize(m.text));
      }
      sx::SeriesParams params;
      params.runs = s_runs;
      params.bootstrap_iters = s_iters;
      params.threads = sx::configured_threads();
      if (s_ci_mode == "pole_words") params.ci_mode = sx::CiMode::pole_words;
      else if (s_ci_mode != "runs") throw sx::ValidationError("--ci-mode must be runs|pole_words");
      params.train.dim = s_dim;
      params.train.window = s_window;
      params.train.negatives = s_negatives;
      params.train.min_count = s_min_count;
      params.train.epochs = s_epochs;
      params.train.subsample = s_subsample;
      params.train.min_tokens = s_min_tokens;
      const auto series = sx::association_series(per_period, s_target, poles, params, s_seed);
      sx::write_association_csv(s_out, s_target, series);
      if (!s_no_anchors) {
        std::vector<std::string> anchors = poles.male;
        anchors.insert(anchors.end(), poles.female.begin(), poles.female.end());
        std::map<std::string, sx::EmbeddingSpace> spaces;
        std::size_t idx = 0;
        for (const auto& [period, sentences] : per_period) {
          spaces.emplace(period, sx::train_embeddings(
                                     sentences, params.train,
                                     sx::Rng(s_seed).fork(0xacc0 + idx).next_u64(), period));
          ++idx;
        }
        std::vector<sx::AnchorRow> rows;
        const sx::EmbeddingSpace* prev = nullptr;
        std::string prev_period;
        for (const auto& [period, space] : spaces) {
          if (prev) {
            const auto rep = sx::anchor_stability(*prev, space, anchors);
            for (const auto& ac : rep.anchors) {
              rows.push_back(sx::AnchorRow{ac.word, prev_period + "-" + period, ac.cosine});
            }
          }
          prev = &space;
          prev_period = period;
        }
        sx::write_anchor_csv(s_anchors_out, rows);
      }
      if (!s_svg.empty()) {
        std::vector<sx::PlotPoint> pts;
        for (const auto& pt : series) {
          pts.push_back(sx::PlotPoint{static_cast<double>(std::stoi(pt.period)),
                                      pt.difference, pt.ci_low, pt.ci_high, pt.period});
        }
        sx::write_band_plot(s_svg, "gender association of '" + s_target + "'",
                            "mean-cosine difference", pts);
      }
      for (const auto& pt : series) {
        std::cout << pt.period << ": diff=" << sx::csv::fmt(pt.difference) << " ["
                  << sx::csv::fmt(pt.ci_low) << ", " << sx::csv::fmt(pt.ci_high) << "]\n";
      }
      return sx::kExitOk;
    }

    if (*report) {
      const int given = (!rp_rates.empty()) + (!rp_did.empty()) + (!rp_shift.empty());
      if (given != 1) {
        throw sx::ValidationError("report: give exactly one of --rates, --did, --shift");
      }
      std::vector<sx::PlotPoint> pts;
      std::string title, ylab;
      if (!rp_rates.empty()) {
        const auto series = series_from_csv(rp_rates);
        for (const auto& p : series.points) {
          pts.push_back(sx::PlotPoint{static_cast<double>(p.bucket.index), p.p, p.ci_low,
                                      p.ci_high, p.bucket.label()});
        }
        title = "rate series";
        ylab = "p";
      } else if (!rp_did.empty()) {
        const auto rows = sx::csv::read_rows(rp_did);
        if (rows.size() < 2 || rows[0] != std::vector<std::string>{"coef", "estimate", "se"}) {
          throw sx::ValidationError(rp_did + ": not an event-study CSV");
        }
        pts.push_back(sx::PlotPoint{0.0, 0.0, 0.0, 0.0, "0"});
        for (std::size_t i = 1; i < rows.size(); ++i) {
          const auto& f = rows[i];
          int k = 0;
          if (f[0].rfind("pi_", 0) == 0) k = std::stoi(f[0].substr(3));
          else if (f[0].rfind("phi_", 0) == 0) k = std::stoi(f[0].substr(4));
          else continue;
          const double est = std::stod(f[1]);
          const double se = std::stod(f[2]);
          pts.push_back(sx::PlotPoint{static_cast<double>(k), est, est - se, est + se,
                                      std::to_string(k)});
        }
        std::sort(pts.begin(), pts.end(),
                  [](const sx::PlotPoint& a, const sx::PlotPoint& b) { return a.x < b.x; });
        title = "event study";
        ylab = "coefficient (rate)";
      } else {
        const auto rows = sx::csv::read_rows(rp_shift);
        if (rows.size() < 2 || rows[0].size() != 5 || rows[0][0] != "year") {
          throw sx::ValidationError(rp_shift + ": not an association CSV");
        }
        for (std::size_t i = 1; i < rows.size(); ++i) {
          pts.push_back(sx::PlotPoint{static_cast<double>(std::stoi(rows[i][0])),
                                      std::stod(rows[i][2]), std::stod(rows[i][3]),
                                      std::stod(rows[i][4]), rows[i][0]});
        }
        title = "association series";
        ylab = "mean-cosine difference";
      }
      sx::write_band_plot(rp_out, title, ylab, pts);
      std::cerr << "wrote " << rp_out << "\n";
      return sx::kExitOk;
    }
  } catch (const sx::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sx::kExitValidationFailure;
  } catch (const sx::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sx::kExitAnalysisFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sx::kExitAnalysisFailure;
  }
  return sx::kExitOk;
}
