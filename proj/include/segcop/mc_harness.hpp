#pragma once

// Replicated Monte Carlo experiments over scenario grids: rejection
// percentages of the bootstrap tests at a given level, written as CSV and as
// an aligned text table.
//
// Every cell draws from a seed derived from the master seed and the cell's
// coordinates only, so a cell's numbers do not depend on which other cells
// are in the grid, on their order, or on the thread count.

#include "segcop/copula_sim.hpp"
#include "segcop/multiplier_bootstrap.hpp"
#include "segcop/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace segcop {

enum class StatChoice { Segmented, Plain, Both };

inline StatChoice parse_stat_choice(const std::string& s) {
  if (s == "snm" || s == "S_nm") return StatChoice::Segmented;
  if (s == "sn" || s == "S_n") return StatChoice::Plain;
  if (s == "both") return StatChoice::Both;
  throw std::invalid_argument("unknown statistic choice '" + s + "'");
}

/// Shortest round-trip-ish decimal for grid coordinates (0.25, 0.1, 200).
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string format_fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct CellCoordinates {
  std::size_t n = 200;
  std::size_t d = 2;
  Family family = Family::Clayton;
  double tau_before = 0.25;
  double tau_after = 0.25;
  double b = 0.5;
  double t = 0.0;
  TemporalMode mode = TemporalMode::IID;

  /// Canonical text used both as the CSV key prefix and as seed material.
  [[nodiscard]] std::string key() const {
    return std::to_string(n) + "," + std::to_string(d) + "," + to_string(family) + "," +
           format_number(tau_before) + "," + format_number(tau_after) + "," + format_number(b) + "," +
           format_number(t) + "," + to_string(mode);
  }
};

struct ExperimentConfig {
  CellCoordinates cell;
  NormalMargin margin_before{2.0, 1.0};
  NormalMargin margin_after{0.0, 1.0};
  double noise_before = 1.0;
  double noise_after = 4.0;
  std::size_t replications = 1000;
  double alpha = 0.05;
  MultiplierConfig multipliers;  // seed is replaced per replicate
  StatChoice stat = StatChoice::Segmented;
  std::uint64_t master_seed = 1;
  std::size_t threads = 1;

  [[nodiscard]] ScenarioSpec scenario() const {
    ScenarioSpec s;
    s.n = cell.n;
    s.d = cell.d;
    s.copula_before = copula_from_tau(cell.family, cell.tau_before);
    s.copula_after = copula_from_tau(cell.family, cell.tau_after);
    s.t = cell.t;
    s.b = cell.b;
    s.margin_before = margin_before;
    s.margin_after = margin_after;
    s.mode = cell.mode;
    s.noise_before = noise_before;
    s.noise_after = noise_after;
    return s;
  }

  [[nodiscard]] std::uint64_t cell_seed() const { return combine_seed(master_seed, hash_string(cell.key())); }
};

struct StatRejection {
  std::string stat;  // "S_nm" or "S_n"
  double reject_pct = 0.0;
  double se_pct = 0.0;
};

struct TableRow {
  CellCoordinates cell;
  std::vector<StatRejection> results;
  std::size_t reps = 0;
  std::size_t B = 0;
  std::uint64_t seed = 0;
};

/// 100 sqrt(p(1-p)/reps) for a rejection fraction p.
inline double binomial_se_pct(double fraction, std::size_t reps) {
  return 100.0 * std::sqrt(fraction * (1.0 - fraction) / static_cast<double>(reps));
}

namespace detail {

template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(count);
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Runs `replications` independent samples of one grid point and reports the
/// percentage of p-values below alpha for each requested statistic. Both
/// statistics reuse the same sample and the same multipliers.
inline TableRow run_cell(const ExperimentConfig& cfg) {
  if (cfg.replications == 0) throw std::invalid_argument("run_cell: replications must be >= 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) throw std::invalid_argument("run_cell: alpha must lie in (0,1]");
  const ScenarioSpec scenario = cfg.scenario();
  scenario.validate();
  const std::uint64_t seed = cfg.cell_seed();
  const std::size_t n = scenario.n;
  const BreakSpec segmented({scenario.marginal_break()}, n);
  const BreakSpec plain = BreakSpec::none(n);
  const bool want_seg = cfg.stat != StatChoice::Plain;
  const bool want_plain = cfg.stat != StatChoice::Segmented;

  std::vector<unsigned char> rej_seg(cfg.replications, 0);
  std::vector<unsigned char> rej_plain(cfg.replications, 0);
  detail::parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
    try {
      PhiloxStream data_rng(combine_seed(seed, 0x5A3D1E), r);
      const SampleMatrix x = generate_scenario(scenario, data_rng);
      MultiplierConfig mc = cfg.multipliers;
      mc.seed = combine_seed(seed, r + 1);
      if (want_seg) rej_seg[r] = bootstrap_test(x, segmented, mc).p_value < cfg.alpha;
      if (want_plain) rej_plain[r] = bootstrap_test(x, plain, mc).p_value < cfg.alpha;
    } catch (const std::exception& e) {
      throw std::runtime_error("replicate " + std::to_string(r) + ": " + e.what());
    }
  });

  TableRow row;
  row.cell = cfg.cell;
  row.reps = cfg.replications;
  row.B = cfg.multipliers.replicates;
  row.seed = seed;
  auto summarize = [&](const std::vector<unsigned char>& hits, const char* name) {
    const auto count = std::count(hits.begin(), hits.end(), static_cast<unsigned char>(1));
    const double frac = static_cast<double>(count) / static_cast<double>(cfg.replications);
    row.results.push_back({name, 100.0 * frac, binomial_se_pct(frac, cfg.replications)});
  };
  if (want_seg) summarize(rej_seg, "S_nm");
  if (want_plain) summarize(rej_plain, "S_n");
  return row;
}

// ---------------------------------------------------------------------------
// Grid files.
//
// One "key = v1, v2, ..." per line, '#' starts a comment. Axis keys (n, d,
// family, tau_before, tau_after, b, t, mode) take lists and are expanded as a
// Cartesian product; tau_after = same (the default) pairs each cell with its
// tau_before.
// Scalar keys: stat (snm|sn|both), multipliers (iid|dependent), bandwidth
// (auto|integer), correction (printed|unit), reps, B, alpha, seed,
// margin_before / margin_after (mean:sd), noise_before / noise_after.

struct GridSpec {
  std::vector<std::size_t> n;
  std::vector<std::size_t> d;
  std::vector<Family> family;
  std::vector<double> tau_before;
  std::vector<double> tau_after;
  bool tau_after_same = true;
  std::vector<double> b;
  std::vector<double> t{0.0};
  std::vector<TemporalMode> mode{TemporalMode::IID};
  ExperimentConfig base;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

inline std::size_t parse_size(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw std::invalid_argument("not a non-negative integer: '" + s + "'");
  }
  return static_cast<std::size_t>(std::stoull(s));
}

inline NormalMargin parse_margin(const std::string& s) {
  const auto parts = split_list(s, ':');
  if (parts.size() != 2) throw std::invalid_argument("margin must be mean:sd, got '" + s + "'");
  return {parse_double(parts[0]), parse_double(parts[1])};
}

}  // namespace detail

inline GridSpec parse_grid(std::istream& in) {
  GridSpec g;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("grid line " + std::to_string(line_no) + ": expected key = values");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string rhs = detail::trim(line.substr(eq + 1));
    const auto vals = detail::split_list(rhs);
    auto scalar = [&]() -> const std::string& {
      if (vals.size() != 1) throw std::invalid_argument("grid line " + std::to_string(line_no) + ": '" + key + "' takes one value");
      return vals.front();
    };
    try {
      if (key == "n") {
        g.n.clear();
        for (const auto& v : vals) g.n.push_back(detail::parse_size(v));
      } else if (key == "d") {
        g.d.clear();
        for (const auto& v : vals) g.d.push_back(detail::parse_size(v));
      } else if (key == "family") {
        g.family.clear();
        for (const auto& v : vals) g.family.push_back(parse_family(v));
      } else if (key == "tau_before") {
        g.tau_before.clear();
        for (const auto& v : vals) g.tau_before.push_back(detail::parse_double(v));
      } else if (key == "tau_after") {
        g.tau_after.clear();
        g.tau_after_same = vals.size() == 1 && vals.front() == "same";
        if (!g.tau_after_same) {
          for (const auto& v : vals) g.tau_after.push_back(detail::parse_double(v));
        }
      } else if (key == "b") {
        g.b.clear();
        for (const auto& v : vals) g.b.push_back(detail::parse_double(v));
      } else if (key == "t") {
        g.t.clear();
        for (const auto& v : vals) g.t.push_back(detail::parse_double(v));
      } else if (key == "mode") {
        g.mode.clear();
        for (const auto& v : vals) g.mode.push_back(parse_mode(v));
      } else if (key == "stat") {
        g.base.stat = parse_stat_choice(scalar());
      } else if (key == "multipliers") {
        const auto& v = scalar();
        if (v == "iid") g.base.multipliers.mode = MultiplierMode::Independent;
        else if (v == "dependent") g.base.multipliers.mode = MultiplierMode::Dependent;
        else throw std::invalid_argument("multipliers must be iid or dependent");
      } else if (key == "bandwidth") {
        const auto& v = scalar();
        g.base.multipliers.bandwidth = v == "auto" ? 0 : detail::parse_size(v);
      } else if (key == "correction") {
        const auto& v = scalar();
        if (v == "printed") g.base.multipliers.correction = CorrectionScale::InverseRootN;
        else if (v == "unit") g.base.multipliers.correction = CorrectionScale::Unit;
        else throw std::invalid_argument("correction must be printed or unit");
      } else if (key == "reps") {
        g.base.replications = detail::parse_size(scalar());
      } else if (key == "B") {
        g.base.multipliers.replicates = detail::parse_size(scalar());
      } else if (key == "alpha") {
        g.base.alpha = detail::parse_double(scalar());
      } else if (key == "seed") {
        g.base.master_seed = std::stoull(scalar());
      } else if (key == "margin_before") {
        g.base.margin_before = detail::parse_margin(scalar());
      } else if (key == "margin_after") {
        g.base.margin_after = detail::parse_margin(scalar());
      } else if (key == "noise_before") {
        g.base.noise_before = detail::parse_double(scalar());
      } else if (key == "noise_after") {
        g.base.noise_after = detail::parse_double(scalar());
      } else {
        throw std::invalid_argument("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      const std::string msg = e.what();
      if (msg.rfind("grid line", 0) == 0) throw;
      throw std::invalid_argument("grid line " + std::to_string(line_no) + ": " + msg);
    }
  }
  if (g.base.replications == 0) throw std::invalid_argument("grid: reps must be >= 1");
  if (!(g.base.alpha > 0.0 && g.base.alpha < 1.0)) throw std::invalid_argument("grid: alpha must lie in (0,1)");
  return g;
}

inline GridSpec load_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open grid file '" + path + "'");
  return parse_grid(in);
}

/// Cells in table order: family, n, d, tau_before, tau_after, t, b, mode.
inline std::vector<ExperimentConfig> expand_grid(const GridSpec& g) {
  std::vector<ExperimentConfig> cells;
  for (const Family fam : g.family) {
    for (const std::size_t n : g.n) {
      for (const std::size_t d : g.d) {
        for (const double tb : g.tau_before) {
          const std::vector<double> afters = g.tau_after_same ? std::vector<double>{tb} : g.tau_after;
          for (const double ta : afters) {
            for (const double t : g.t) {
              for (const double b : g.b) {
                for (const TemporalMode m : g.mode) {
                  ExperimentConfig c = g.base;
                  c.cell = {n, d, fam, tb, ta, b, t, m};
                  cells.push_back(c);
                }
              }
            }
          }
        }
      }
    }
  }
  return cells;
}

inline constexpr const char* kCsvHeader = "n,d,family,tau_before,tau_after,b,t,mode,stat,reject_pct,se_pct,reps,B,seed";

inline std::vector<std::string> csv_lines(const TableRow& row) {
  std::vector<std::string> out;
  for (const auto& r : row.results) {
    out.push_back(row.cell.key() + "," + r.stat + "," + format_fixed(r.reject_pct, 1) + "," +
                  format_fixed(r.se_pct, 2) + "," + std::to_string(row.reps) + "," + std::to_string(row.B) +
                  "," + std::to_string(row.seed));
  }
  return out;
}

/// Aligned plain-text rendering of CSV text (header + rows).
inline std::string aligned_table(const std::vector<std::string>& lines) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::size_t> width;
  for (const auto& l : lines) {
    std::vector<std::string> fields;
    std::stringstream ss(l);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (width.size() < fields.size()) width.resize(fields.size(), 0);
    for (std::size_t i = 0; i < fields.size(); ++i) width[i] = std::max(width[i], fields[i].size());
    cells.push_back(std::move(fields));
  }
  std::string out;
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += "  ";
      out += std::string(width[i] - row[i].size(), ' ') + row[i];
    }
    out += '\n';
  }
  return out;
}

struct RunTableOptions {
  bool resume = false;
  std::size_t threads = 1;
  std::function<void(std::size_t done, std::size_t total, const TableRow&)> progress;
};

namespace detail {

inline std::vector<std::string> stat_names(StatChoice s) {
  switch (s) {
    case StatChoice::Segmented: return {"S_nm"};
    case StatChoice::Plain: return {"S_n"};
    case StatChoice::Both: return {"S_nm", "S_n"};
  }
  return {};
}

inline void write_outputs(const std::string& path, const std::vector<std::string>& lines) {
  {
    std::ofstream csv(path, std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot write '" + path + "'");
    csv << kCsvHeader << '\n';
    for (const auto& l : lines) csv << l << '\n';
    if (!csv) throw std::runtime_error("write failed for '" + path + "'");
  }
  std::vector<std::string> all{kCsvHeader};
  all.insert(all.end(), lines.begin(), lines.end());
  std::ofstream txt(path + ".txt", std::ios::trunc);
  if (!txt) throw std::runtime_error("cannot write '" + path + ".txt'");
  txt << aligned_table(all);
}

}  // namespace detail

/// Runs every cell of the grid and writes `out_path` (CSV) plus
/// `out_path`.txt. The CSV is rewritten after each cell, so an interrupted
/// run can be continued with resume = true, which keeps rows already present.
inline void run_table(const GridSpec& grid, const std::string& out_path, const RunTableOptions& opts = {}) {
  const auto cells = expand_grid(grid);
  std::map<std::string, std::string> existing;  // "cell key,stat" -> CSV line
  if (opts.resume) {
    std::ifstream in(out_path);
    std::string line;
    bool header = true;
    while (in && std::getline(in, line)) {
      if (header) {
        header = false;
        continue;
      }
      std::size_t pos = 0;
      for (int f = 0; f < 9 && pos != std::string::npos; ++f) pos = line.find(',', pos + (f ? 1 : 0));
      if (pos != std::string::npos) existing[line.substr(0, pos)] = line;
    }
  }

  std::vector<std::vector<std::string>> lines(cells.size());
  auto flatten = [&] {
    std::vector<std::string> all;
    for (const auto& l : lines) all.insert(all.end(), l.begin(), l.end());
    return all;
  };
  std::vector<std::size_t> todo;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    bool have_all = opts.resume;
    std::vector<std::string> kept;
    for (const auto& s : detail::stat_names(cells[c].stat)) {
      const auto it = existing.find(cells[c].cell.key() + "," + s);
      if (it == existing.end()) have_all = false;
      else kept.push_back(it->second);
    }
    if (have_all) lines[c] = kept;
    else todo.push_back(c);
  }
  detail::write_outputs(out_path, flatten());

  std::size_t done = cells.size() - todo.size();
  for (const std::size_t c : todo) {
    ExperimentConfig cfg = cells[c];
    cfg.threads = opts.threads;
    const TableRow row = run_cell(cfg);
    lines[c] = csv_lines(row);
    detail::write_outputs(out_path, flatten());
    ++done;
    if (opts.progress) opts.progress(done, cells.size(), row);
  }
}

}  // namespace segcop
