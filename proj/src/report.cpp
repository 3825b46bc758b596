#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "curio/experiment.hpp"

namespace curio {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string plan_string(const Plan& p) {
  std::string out;
  for (std::size_t i = 0; i < p.controls.size(); ++i) {
    if (i) out += ' ';
    out += num(p.controls[i]);
  }
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << text;
  out.flush();
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path.string() + ": cannot open for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json aggregate_json(const Aggregate& a) { return {{"mean", a.mean}, {"std", a.std}, {"n", a.n}}; }

json range_pair_json(const RangePair& r) {
  return json::array({{r.low.low, r.low.high}, {r.high.low, r.high.high}});
}

RangePair range_pair_from(const json& j, Factor f) {
  const auto& a = j.at(0);
  const auto& b = j.at(1);
  return {FactorRange{f, a.at(0).get<double>(), a.at(1).get<double>()},
          FactorRange{f, b.at(0).get<double>(), b.at(1).get<double>()}};
}

constexpr const char* kAggregateHeader =
    "train_f1_mean,train_f1_std,train_silhouette_mean,train_silhouette_std,train_total_mean,train_total_std,"
    "holdout_f1_mean,holdout_f1_std,holdout_silhouette_mean,holdout_silhouette_std";

std::string aggregate_cells(const ReplicationResult& r) {
  std::string out;
  for (const Aggregate* a : {&r.train_f1, &r.train_silhouette, &r.train_total, &r.holdout_f1, &r.holdout_silhouette})
    out += (out.empty() ? "" : ",") + num(a->mean) + "," + num(a->std);
  return out;
}

}  // namespace

std::string details_csv(const ReplicationResult& r) {
  std::ostringstream out;
  out << "label,fingerprint,row,seed,ok,train_f1,train_silhouette,train_total,holdout_f1,holdout_silhouette,"
         "holdout_degenerate,evaluations,best_plan,error\n";
  const std::string prefix = csv_field(r.label) + "," + r.fingerprint + ",";
  for (const SeedResult& s : r.seeds) {
    out << prefix << "seed," << s.seed << "," << (s.ok ? 1 : 0) << "," << num(s.train.f1) << ","
        << num(s.train.silhouette) << "," << num(s.train.total) << "," << num(s.holdout_f1) << ","
        << num(s.holdout_silhouette) << "," << (s.holdout_degenerate ? 1 : 0) << "," << s.evaluations << ","
        << plan_string(s.best_plan) << "," << csv_field(s.error) << "\n";
  }
  const Aggregate* cols[] = {&r.train_f1, &r.train_silhouette, &r.train_total, &r.holdout_f1, &r.holdout_silhouette};
  for (const char* stat : {"mean", "std"}) {
    const bool mean = stat[0] == 'm';
    out << prefix << stat << ",," << r.holdout_f1.n << ",";
    for (int i = 0; i < 5; ++i) out << num(mean ? cols[i]->mean : cols[i]->std) << ",";
    out << ",,,\n";
  }
  return out.str();
}

std::string summary_json(const ReplicationResult& r) {
  json seeds = json::array();
  for (const SeedResult& s : r.seeds) {
    seeds.push_back({{"seed", s.seed},
                     {"ok", s.ok},
                     {"error", s.error},
                     {"best_plan", {{"horizon", s.best_plan.horizon}, {"values", s.best_plan.controls}}},
                     {"train",
                      {{"f1", s.train.f1},
                       {"silhouette", s.train.silhouette},
                       {"k", s.train.k},
                       {"total", s.train.total},
                       {"degenerate", s.train.degenerate}}},
                     {"holdout_f1", s.holdout_f1},
                     {"holdout_silhouette", s.holdout_silhouette},
                     {"holdout_degenerate", s.holdout_degenerate},
                     {"evaluations", s.evaluations}});
  }
  json j = {
      {"fingerprint", r.fingerprint},
      {"label", r.label},
      {"config", json::parse(canonical_json(r.config))},
      {"resolved",
       {{"primary", factor_key(r.resolved.primary)},
        {"ranges", range_pair_json(r.resolved.ranges)},
        {"secondary", r.resolved.secondary ? json(factor_key(*r.resolved.secondary)) : json(nullptr)},
        {"secondary_ranges", r.resolved.secondary_ranges ? range_pair_json(*r.resolved.secondary_ranges)
                                                         : json(nullptr)}}},
      {"seeds", seeds},
      {"aggregate",
       {{"train_f1", aggregate_json(r.train_f1)},
        {"train_silhouette", aggregate_json(r.train_silhouette)},
        {"train_total", aggregate_json(r.train_total)},
        {"holdout_f1", aggregate_json(r.holdout_f1)},
        {"holdout_silhouette", aggregate_json(r.holdout_silhouette)}}},
  };
  return j.dump(2) + "\n";
}

ReplicationResult read_summary(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  ReplicationResult r;
  try {
    r.fingerprint = j.at("fingerprint").get<std::string>();
    r.label = j.at("label").get<std::string>();
    r.config = parse_config(j.at("config").dump());
    r.resolved = resolve(r.config.scenario);
    for (const auto& s : j.at("seeds")) {
      SeedResult sr;
      sr.seed = s.at("seed").get<std::uint64_t>();
      sr.ok = s.at("ok").get<bool>();
      sr.error = s.at("error").get<std::string>();
      const auto& plan = s.at("best_plan");
      sr.best_plan = Plan(plan.at("horizon").get<int>(), plan.at("values").get<std::vector<double>>());
      const auto& t = s.at("train");
      sr.train = {t.at("f1").get<double>(), t.at("silhouette").get<double>(), t.at("k").get<double>(),
                  t.at("total").get<double>(), t.at("degenerate").get<bool>()};
      sr.holdout_f1 = s.at("holdout_f1").get<double>();
      sr.holdout_silhouette = s.at("holdout_silhouette").get<double>();
      sr.holdout_degenerate = s.at("holdout_degenerate").get<bool>();
      sr.evaluations = s.at("evaluations").get<long>();
      r.seeds.push_back(std::move(sr));
    }
    if (j.at("resolved").at("ranges").is_array())
      r.resolved.ranges = range_pair_from(j.at("resolved").at("ranges"), r.resolved.primary);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": malformed summary (" + e.what() + ")");
  } catch (const ConfigError& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  r.recompute_aggregates();
  return r;
}

void write_result(const ReplicationResult& r, const std::string& out_dir) {
  const fs::path dir = fs::path(out_dir) / r.fingerprint;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error(dir.string() + ": " + ec.message());
  write_file(dir / "details.csv", details_csv(r));
  write_file(dir / "summary.json", summary_json(r));
  std::string trace;
  for (const SeedResult& s : r.seeds) {
    trace += "# seed " + std::to_string(s.seed) + "\n" + s.trace;
    if (!s.ok) trace += "# error: " + s.error + "\n";
  }
  write_file(dir / "trace.log", trace);
}

void write_suite_table(const std::vector<ReplicationResult>& results, const std::string& path) {
  std::string out = std::string("label,fingerprint,planner,n_seeds,") + kAggregateHeader + "\n";
  for (const auto& r : results)
    out += csv_field(r.label) + "," + r.fingerprint + "," + std::string(planner_key(r.config.planner)) + "," +
           std::to_string(r.holdout_f1.n) + "," + aggregate_cells(r) + "\n";
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  write_file(p, out);
}

void write_grid_tables(const TwoFactorGrid& grid, const std::string& dir) {
  fs::create_directories(dir);
  auto matrix = [&](auto value) {
    std::string out = "primary";
    for (Factor f : kAllFactors) out += "," + csv_field(std::string(factor_label(f)));
    out += "\n";
    for (Factor p : kAllFactors) {
      out += csv_field(std::string(factor_label(p)));
      for (Factor q : kAllFactors) {
        out += ",";
        if (const auto& cell = grid.cells[index_of(p)][index_of(q)]) out += num(value(*cell));
        else if (is_excluded_pair(p, q)) out += "excluded";
      }
      out += "\n";
    }
    return out;
  };
  write_file(fs::path(dir) / "f1_matrix.csv", matrix([](const ReplicationResult& r) { return r.holdout_f1.mean; }));
  write_file(fs::path(dir) / "silhouette_matrix.csv",
             matrix([](const ReplicationResult& r) { return r.holdout_silhouette.mean; }));
}

std::size_t regenerate_reports(const std::string& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error(dir + ": not a directory");
  std::vector<fs::path> summaries;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().filename() == "summary.json") summaries.push_back(entry.path());
  std::sort(summaries.begin(), summaries.end());
  std::vector<ReplicationResult> results;
  for (const auto& p : summaries) {
    ReplicationResult r = read_summary(p.string());
    write_file(p.parent_path() / "details.csv", details_csv(r));
    results.push_back(std::move(r));
  }
  std::stable_sort(results.begin(), results.end(),
                   [](const ReplicationResult& a, const ReplicationResult& b) { return a.label < b.label; });
  if (!results.empty()) write_suite_table(results, (fs::path(dir) / "table.csv").string());
  return results.size();
}

}  // namespace curio
