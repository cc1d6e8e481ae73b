#include "crindep/cli_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "crindep/asymptotics.hpp"
#include "crindep/power_study.hpp"
#include "crindep/resampling.hpp"

namespace crindep {

std::string to_string(CensorPolicy policy) {
  return policy == CensorPolicy::extra_cause ? "extra_cause" : "drop";
}

CensorPolicy parse_censor_policy(const std::string& text) {
  if (text == "extra_cause") return CensorPolicy::extra_cause;
  if (text == "drop") return CensorPolicy::drop;
  throw std::invalid_argument("unknown censor policy '" + text +
                              "' (expected extra_cause or drop)");
}

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::optional<long long> parse_integer(const std::string& text) {
  long long v = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec == std::errc{} && res.ptr == last) return v;
  return std::nullopt;
}

std::optional<double> parse_real(const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec == std::errc{} && res.ptr == last) return v;
  return std::nullopt;
}

std::size_t column_index(const std::vector<std::string>& header,
                         const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw IngestionError("missing column '" + name + "'");
  return static_cast<std::size_t>(std::distance(header.begin(), it));
}

const std::string& cell(const std::vector<std::string>& fields, std::size_t idx,
                        std::size_t row) {
  if (idx >= fields.size()) {
    throw IngestionError("row " + std::to_string(row) + " has " +
                         std::to_string(fields.size()) + " fields, expected at least " +
                         std::to_string(idx + 1));
  }
  return fields[idx];
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(std::move(current)));
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  if (quoted) throw IngestionError("unterminated quoted field");
  fields.push_back(trim(std::move(current)));
  return fields;
}

Ingested read_csv(std::istream& in, const IngestionPolicy& policy) {
  std::string line;
  if (!std::getline(in, line)) throw IngestionError("no header row");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  const auto header = split_csv_line(line);
  const std::size_t time_idx = column_index(header, policy.time_column);
  const std::size_t cause_idx = column_index(header, policy.cause_column);
  std::optional<std::size_t> status_idx;
  if (policy.status_column) status_idx = column_index(header, *policy.status_column);

  struct Row {
    Time time;
    std::optional<Cause> cause;  // empty when censored
  };
  std::vector<Row> rows;
  IngestionSummary summary;
  Cause max_label = 0;
  for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    try {
      fields = split_csv_line(line);
    } catch (const IngestionError& e) {
      throw IngestionError(std::string(e.what()) + " at row " + std::to_string(line_no));
    }
    const std::string& time_text = cell(fields, time_idx, line_no);
    Time t = 0;
    if (const auto v = parse_integer(time_text)) {
      t = *v;
    } else if (const auto r = parse_real(time_text)) {
      if (std::floor(*r) != *r || std::abs(*r) > 9e15) {
        throw IngestionError("non-integer time '" + time_text + "' at row " +
                             std::to_string(line_no) +
                             "; rank-map the observed times to 1, 2, ... first");
      }
      t = static_cast<Time>(*r);
    } else {
      throw IngestionError("unparseable time '" + time_text + "' at row " +
                           std::to_string(line_no));
    }
    if (t < 1) {
      throw IngestionError("non-positive time at row " + std::to_string(line_no));
    }

    const std::string& cause_text = cell(fields, cause_idx, line_no);
    bool censored = policy.censored_values.contains(cause_text);
    if (status_idx) {
      censored = policy.censored_values.contains(cell(fields, *status_idx, line_no));
    }
    ++summary.rows;
    if (censored) {
      ++summary.censored;
      rows.push_back({t, std::nullopt});
      continue;
    }
    Cause c = 0;
    if (const auto it = policy.cause_label_map.find(cause_text);
        it != policy.cause_label_map.end()) {
      c = it->second;
    } else if (const auto v = parse_integer(cause_text)) {
      c = static_cast<Cause>(*v);
    } else {
      throw IngestionError("unmapped cause label '" + cause_text + "' at row " +
                           std::to_string(line_no) + " (use --cause-map)");
    }
    if (c < 1) {
      throw IngestionError("cause " + std::to_string(c) + " below 1 at row " +
                           std::to_string(line_no));
    }
    if (policy.k && c > *policy.k) {
      throw IngestionError("cause " + std::to_string(c) + " exceeds k=" +
                           std::to_string(*policy.k) + " at row " +
                           std::to_string(line_no));
    }
    max_label = std::max(max_label, c);
    rows.push_back({t, c});
  }
  if (rows.empty()) throw IngestionError("no data rows");

  int k = policy.k.value_or(max_label);
  summary.event_causes = k;
  const bool extra = policy.censor_policy == CensorPolicy::extra_cause && summary.censored > 0;
  if (extra) ++k;
  // a single observed cause still forms a two-cause sample with cause 2 empty
  k = std::max(k, 2);

  std::vector<Time> times;
  std::vector<Cause> causes;
  for (const auto& r : rows) {
    if (!r.cause) {
      if (!extra) {
        ++summary.dropped;
        continue;
      }
      times.push_back(r.time);
      causes.push_back(summary.event_causes + 1);
    } else {
      times.push_back(r.time);
      causes.push_back(*r.cause);
    }
  }
  if (times.empty()) throw IngestionError("no data rows remain after dropping censored rows");
  Sample sample(std::move(times), std::move(causes), k);
  summary.counts = sample.cause_counts();
  return {std::move(sample), std::move(summary)};
}

Ingested read_csv(const std::string& path, const IngestionPolicy& policy) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open '" + path + "'");
  return read_csv(in, policy);
}

void write_sample_csv(std::ostream& out, const Sample& sample) {
  out << "time,cause\n";
  for (std::size_t i = 0; i < sample.n(); ++i) {
    out << sample.times()[i] << ',' << sample.causes()[i] << '\n';
  }
}

std::string describe(const IngestionSummary& summary) {
  std::ostringstream s;
  std::size_t n = 0;
  for (auto c : summary.counts) n += c;
  s << "ingested n=" << n << " k=" << summary.counts.size() << " counts=";
  for (std::size_t j = 0; j < summary.counts.size(); ++j) {
    s << (j ? "," : "") << summary.counts[j];
  }
  if (summary.censored > 0) {
    s << " (censored rows: " << summary.censored;
    if (summary.dropped > 0) {
      s << ", dropped)";
    } else {
      s << ", cause " << summary.event_causes + 1 << ")";
    }
  }
  return s.str();
}

namespace {

struct InputFlags {
  std::string input;
  std::string time_col = "time";
  std::string cause_col = "cause";
  std::string status_col;
  std::vector<std::string> cause_map;
  std::vector<std::string> censored_values;
  std::string censor = "extra_cause";
  int k = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--input", input, "CSV file with time and cause columns")->required();
    cmd->add_option("--time-col", time_col, "Time column name")->capture_default_str();
    cmd->add_option("--cause-col", cause_col, "Cause column name")->capture_default_str();
    cmd->add_option("--status-col", status_col, "Optional status column marking censoring");
    cmd->add_option("--cause-map", cause_map, "Label mapping LABEL=INT (repeatable)");
    cmd->add_option("--censored-value", censored_values,
                    "Cell value marking a censored row (default 0; repeatable)");
    cmd->add_option("--censor", censor, "Censoring policy: extra_cause or drop")
        ->check(CLI::IsMember({"extra_cause", "drop"}))
        ->capture_default_str();
    cmd->add_option("--k", k, "Number of event causes (inferred when omitted)");
  }

  IngestionPolicy policy() const {
    IngestionPolicy p;
    p.time_column = time_col;
    p.cause_column = cause_col;
    if (!status_col.empty()) p.status_column = status_col;
    if (!censored_values.empty()) {
      p.censored_values = {censored_values.begin(), censored_values.end()};
    }
    p.censor_policy = parse_censor_policy(censor);
    for (const auto& entry : cause_map) {
      const auto eq = entry.rfind('=');
      const auto value = eq == std::string::npos
                             ? std::nullopt
                             : parse_integer(trim(entry.substr(eq + 1)));
      if (!value) throw std::invalid_argument("--cause-map expects LABEL=INT, got '" + entry + "'");
      p.cause_label_map[trim(entry.substr(0, eq))] = static_cast<Cause>(*value);
    }
    if (k > 0) p.k = k;
    return p;
  }
};

std::uint64_t default_seed() {
  if (const char* env = std::getenv(kSeedEnvVar)) {
    if (const auto v = parse_integer(env); v && *v >= 0) {
      return static_cast<std::uint64_t>(*v);
    }
  }
  return BootstrapConfig{}.seed;
}

std::vector<double> parse_grid(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = parse_real(trim(item));
    if (!v) throw std::invalid_argument(flag + ": cannot parse '" + item + "'");
    out.push_back(*v);
  }
  if (out.empty()) throw std::invalid_argument(flag + ": empty grid");
  return out;
}

void emit(const std::string& path, std::ostream& out,
          const std::function<void(std::ostream&)>& write) {
  if (path.empty() || path == "-") {
    write(out);
    return;
  }
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write '" + path + "'");
  write(file);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Independence test for discrete competing-risks data"};
  app.require_subcommand(1);

  // test
  InputFlags test_in;
  BootstrapConfig boot;
  boot.seed = default_seed();
  std::vector<double> alphas;
  std::string scheme = "uniform";
  bool asymptotic = false;
  std::string variance = "plugin";
  std::string test_out;
  auto* test = app.add_subcommand("test", "Bootstrap independence test on a CSV sample");
  test_in.attach(test);
  test->add_option("-B,--B", boot.replicates, "Bootstrap replicates")->capture_default_str();
  test->add_option("--alpha", alphas, "Significance level (repeatable; default 0.05 0.01)");
  test->add_option("--scheme", scheme, "Null cause scheme: uniform or empirical")
      ->check(CLI::IsMember({"uniform", "empirical"}))
      ->capture_default_str();
  test->add_option("--seed", boot.seed, "Master seed (default from CRINDEP_SEED)");
  test->add_flag("--asymptotic", asymptotic, "Add the asymptotic z-test to the report");
  test->add_option("--variance", variance, "z-test variance estimator: plugin or jackknife")
      ->check(CLI::IsMember({"plugin", "jackknife"}))
      ->capture_default_str();
  test->add_option("--threads", boot.threads, "Worker threads (0 = all cores)");
  test->add_option("--out", test_out, "Write the JSON report here instead of stdout");

  // power
  std::string model = "geometric";
  double p = 0.3;
  double beta = 1.0;
  std::string a_grid = "1,1.2,1.5,1.8,2";
  std::string n_grid = "25,50,75,100";
  std::vector<double> power_alphas;
  PowerStudyConfig study;
  study.seed = default_seed();
  double pi1 = 0.5;
  std::string power_out;
  std::string format = "csv";
  auto* power = app.add_subcommand("power", "Monte Carlo size/power table");
  power->add_option("--model", model, "Lifetime model: geometric or weibull")
      ->check(CLI::IsMember({"geometric", "weibull"}))
      ->capture_default_str();
  power->add_option("--p", p, "Model parameter p in (0,1)")->capture_default_str();
  power->add_option("--beta", beta, "Discrete Weibull shape")->capture_default_str();
  power->add_option("--a-grid", a_grid, "Comma-separated dependence exponents")->capture_default_str();
  power->add_option("--n-grid", n_grid, "Comma-separated sample sizes")->capture_default_str();
  power->add_option("--alpha", power_alphas, "Significance level (repeatable; default 0.05 0.01)");
  power->add_option("--reps", study.replications, "Replications per cell")->capture_default_str();
  power->add_option("-B,--B", study.bootstrap, "Null replicates per replication")->capture_default_str();
  power->add_option("--pi1", pi1, "Proportion of cause 1")->capture_default_str();
  power->add_option("--seed", study.seed, "Master seed (default from CRINDEP_SEED)");
  power->add_option("--threads", study.threads, "Worker threads (0 = all cores)");
  power->add_option("--format", format, "csv, wide or json")
      ->check(CLI::IsMember({"csv", "wide", "json"}))
      ->capture_default_str();
  power->add_option("--out", power_out, "Output path (default stdout)");

  // cif
  InputFlags cif_in;
  std::string cif_out;
  auto* cif = app.add_subcommand("cif", "Cumulative incidence table for plotting");
  cif_in.attach(cif);
  cif->add_option("--out", cif_out, "Output path (default stdout)");

  std::vector<const char*> argv{"crindep"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (*test) {
      const Ingested data = read_csv(test_in.input, test_in.policy());
      err << describe(data.summary) << '\n';
      if (!alphas.empty()) boot.alpha_levels = alphas;
      boot.scheme = parse_cause_scheme(scheme);
      const TestReport report = independence_test(data.sample, boot);
      auto json = to_json(report);
      if (asymptotic) {
        nlohmann::ordered_json z;
        z["method"] = variance;
        nlohmann::ordered_json levels = nlohmann::ordered_json::object();
        for (double a : boot.alpha_levels) {
          nlohmann::ordered_json entry;
          try {
            const auto res = asymptotic_test(data.sample, a, parse_variance_method(variance));
            entry["statistic"] = res.statistic;
            entry["sigma0_sq"] = res.sigma0_sq;
            entry["z_alpha"] = res.z_alpha;
            entry["decision"] = res.reject ? "reject" : "accept";
            entry["warnings"] = res.warnings;
          } catch (const std::exception& e) {
            entry["error"] = e.what();
          }
          levels[format_double(a)] = std::move(entry);
        }
        z["levels"] = std::move(levels);
        json["asymptotic"] = std::move(z);
      }
      emit(test_out, out, [&](std::ostream& o) { o << json.dump(2) << '\n'; });
      return 0;
    }
    if (*power) {
      study.models = {model == "geometric" ? LifetimeModel::geometric(p)
                                           : LifetimeModel::discrete_weibull(p, beta)};
      study.a_grid = parse_grid(a_grid, "--a-grid");
      std::vector<std::size_t> ns;
      for (double v : parse_grid(n_grid, "--n-grid")) {
        if (v < 3 || std::floor(v) != v) throw std::invalid_argument("--n-grid: sizes must be integers >= 3");
        ns.push_back(static_cast<std::size_t>(v));
      }
      study.n_grid = ns;
      if (!power_alphas.empty()) study.alpha_levels = power_alphas;
      study.pi = {pi1};
      study.validate();
      for (double a : study.a_grid) {
        DependentFamily check(study.models.front(), a, study.pi);  // rejects before running
      }
      const PowerTable table = power_study(study);
      emit(power_out, out, [&](std::ostream& o) {
        if (format == "json") {
          o << to_json(table).dump(2) << '\n';
        } else if (format == "wide") {
          write_power_wide_csv(o, table);
        } else {
          write_power_csv(o, table);
        }
      });
      return 0;
    }
    if (*cif) {
      const Ingested data = read_csv(cif_in.input, cif_in.policy());
      err << describe(data.summary) << '\n';
      const CifTable table = cif_table(data.sample);
      emit(cif_out, out, [&](std::ostream& o) { write_cif_csv(o, table); });
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace crindep
