#include "crindep/power_study.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include "crindep/detail/parallel.hpp"
#include "crindep/resampling.hpp"

namespace crindep {

void PowerStudyConfig::validate() const {
  if (models.empty()) throw std::invalid_argument("power study: no lifetime model");
  if (a_grid.empty() || n_grid.empty()) {
    throw std::invalid_argument("power study: empty a or n grid");
  }
  if (replications < 1) throw std::invalid_argument("replications must be >= 1");
  if (bootstrap < 100) throw std::invalid_argument("bootstrap B must be >= 100");
  if (alpha_levels.empty()) throw std::invalid_argument("no significance levels");
  for (double a : alpha_levels) {
    if (!(a > 0.0 && a < 1.0)) {
      throw std::invalid_argument("significance level outside (0, 1)");
    }
  }
  for (std::size_t n : n_grid) {
    if (n < 3) throw std::invalid_argument("sample sizes must be at least 3");
  }
}

namespace {

struct Workspace {
  explicit Workspace(int k, std::size_t n, std::size_t b)
      : evaluator(k), times(n), causes(n), null_values(b) {}
  DeltaEvaluator evaluator;
  std::vector<Time> times;
  std::vector<Cause> causes;
  std::vector<double> null_values;
};

PowerRow row_skeleton(const LifetimeModel& model, double a, std::size_t n,
                      double alpha) {
  PowerRow row;
  row.model = model.name();
  row.parametric = model.kind() != LifetimeModel::Kind::explicit_pmf;
  row.p = model.p();
  row.beta = model.beta();
  row.a = a;
  row.n = n;
  row.alpha = alpha;
  return row;
}

}  // namespace

std::vector<PowerRow> power_cell(const DependentFamily& family, std::size_t n,
                                 const PowerStudyConfig& config, std::size_t cell) {
  const DependentFamily null_family(family.base(), 1.0,
                                    {family.pi().begin(), family.pi().end()});
  const std::size_t levels = config.alpha_levels.size();
  const unsigned workers = resolve_threads(config.threads);
  std::vector<Workspace> spaces;
  spaces.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) spaces.emplace_back(family.k(), n, config.bootstrap);

  // rejected[r * levels + i]
  std::vector<unsigned char> rejected(config.replications * levels, 0);
  parallel_for(config.replications, workers, [&](std::size_t r, unsigned w) {
    Workspace& ws = spaces[w];
    Rng data_rng = Rng::stream(config.seed, {cell, r, 0});
    sample_competing_risks_into(family, data_rng, ws.times, ws.causes);
    const double observed = ws.evaluator(ws.times, ws.causes);

    Rng null_rng = Rng::stream(config.seed, {cell, r, 1});
    for (double& v : ws.null_values) {
      sample_competing_risks_into(null_family, null_rng, ws.times, ws.causes);
      v = ws.evaluator(ws.times, ws.causes);
    }
    std::sort(ws.null_values.begin(), ws.null_values.end());
    for (std::size_t i = 0; i < levels; ++i) {
      const double cv = upper_order_statistic(ws.null_values, config.alpha_levels[i]);
      rejected[r * levels + i] = observed > cv ? 1 : 0;
    }
  });

  std::vector<PowerRow> rows;
  for (std::size_t i = 0; i < levels; ++i) {
    PowerRow row = row_skeleton(family.base(), family.a(), n, config.alpha_levels[i]);
    for (std::size_t r = 0; r < config.replications; ++r) {
      row.rejections += rejected[r * levels + i];
    }
    row.replications = config.replications;
    const double reps = static_cast<double>(config.replications);
    row.power = static_cast<double>(row.rejections) / reps;
    row.mc_se = std::sqrt(row.power * (1.0 - row.power) / reps);
    rows.push_back(std::move(row));
  }
  return rows;
}

PowerTable power_study(const PowerStudyConfig& config) {
  config.validate();
  PowerTable table;
  std::size_t cell = 0;
  for (const auto& model : config.models) {
    for (double a : config.a_grid) {
      for (std::size_t n : config.n_grid) {
        try {
          const DependentFamily family(model, a, config.pi);
          auto rows = power_cell(family, n, config, cell);
          table.rows.insert(table.rows.end(), rows.begin(), rows.end());
        } catch (const std::exception& e) {
          for (double alpha : config.alpha_levels) {
            PowerRow row = row_skeleton(model, a, n, alpha);
            row.power = std::nan("");
            row.mc_se = std::nan("");
            row.error = e.what();
            table.rows.push_back(std::move(row));
          }
        }
        ++cell;
      }
    }
  }
  return table;
}

namespace {

std::string cell_value(double v) {
  return std::isnan(v) ? std::string{} : format_double(v);
}

std::string model_label(const PowerRow& row) {
  if (!row.parametric) return row.model;
  if (row.model == "geometric") return "geometric(p=" + format_double(row.p) + ")";
  return row.model + "(p=" + format_double(row.p) + ",beta=" + format_double(row.beta) + ")";
}

}  // namespace

void write_power_csv(std::ostream& out, const PowerTable& table) {
  out << "model,p,beta,a,n,alpha,power,mc_se\n";
  for (const auto& row : table.rows) {
    out << row.model << ',' << (row.parametric ? format_double(row.p) : "") << ','
        << (row.parametric && row.model != "geometric" ? format_double(row.beta) : "")
        << ',' << format_double(row.a) << ',' << row.n << ','
        << format_double(row.alpha) << ',' << cell_value(row.power) << ','
        << cell_value(row.mc_se) << '\n';
  }
}

void write_power_wide_csv(std::ostream& out, const PowerTable& table) {
  std::vector<std::string> columns;
  std::map<std::pair<double, std::size_t>, std::map<std::string, double>> cells;
  std::vector<std::pair<double, std::size_t>> order;
  for (const auto& row : table.rows) {
    const std::string col = model_label(row) + " alpha=" + format_double(row.alpha);
    if (std::find(columns.begin(), columns.end(), col) == columns.end()) {
      columns.push_back(col);
    }
    const auto key = std::make_pair(row.a, row.n);
    if (!cells.contains(key)) order.push_back(key);
    cells[key][col] = row.power;
  }
  std::stable_sort(order.begin(), order.end());
  out << "a,n";
  for (const auto& c : columns) out << ',' << c;
  out << '\n';
  for (const auto& key : order) {
    out << format_double(key.first) << ',' << key.second;
    const auto& values = cells[key];
    for (const auto& c : columns) {
      const auto it = values.find(c);
      out << ',' << (it == values.end() ? std::string{} : cell_value(it->second));
    }
    out << '\n';
  }
}

nlohmann::ordered_json to_json(const PowerTable& table) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json r;
    r["model"] = row.model;
    r["p"] = row.parametric ? nlohmann::ordered_json(row.p) : nullptr;
    r["beta"] = row.parametric ? nlohmann::ordered_json(row.beta) : nullptr;
    r["a"] = row.a;
    r["n"] = row.n;
    r["alpha"] = row.alpha;
    if (row.error.empty()) {
      r["power"] = row.power;
      r["mc_se"] = row.mc_se;
      r["rejections"] = row.rejections;
      r["replications"] = row.replications;
    } else {
      r["power"] = nullptr;
      r["mc_se"] = nullptr;
      r["error"] = row.error;
    }
    rows.push_back(std::move(r));
  }
  return nlohmann::ordered_json{{"rows", std::move(rows)}};
}

}  // namespace crindep
