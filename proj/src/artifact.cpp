#include "nflsim/artifact.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "json.hpp"

#include "nflsim/errors.hpp"

namespace nflsim {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

std::optional<double> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

nlohmann::json params_json(const ParamVector& p) {
  return nlohmann::json(std::vector<double>(p.values().begin(), p.values().end()));
}

}  // namespace

std::string format_metrics_row(const RoundMetrics& m) {
  std::string events;
  for (const std::string& e : m.events) {
    if (!events.empty()) events += ';';
    events += e;
  }
  return std::to_string(m.round) + "," + fmt(m.beta_r) + "," + fmt(m.beta_win) + "," +
         fmt(m.beta_true) + "," + fmt(m.acc) + "," + fmt(m.beta_guard) + "," +
         (m.nfl_flag ? "1" : "0") + "," + events;
}

ArtifactWriter::ArtifactWriter(const std::string& dir, const SimConfig& config)
    : dir_(dir) {
  fs::create_directories(dir_);
  {
    std::ofstream manifest = open_out(fs::path(dir_) / "manifest.json");
    nlohmann::json j;
    j["config"] = to_json(config);
    j["aggregator"] = to_string(config.aggregator.kind);
    j["metrics_header"] = kMetricsHeader;
    manifest << j.dump(2) << "\n";
  }
  metrics_ = open_out(fs::path(dir_) / "metrics.csv");
  events_ = open_out(fs::path(dir_) / "events.log");
  trajectory_ = open_out(fs::path(dir_) / "trajectory.txt");
  metrics_ << kMetricsHeader << "\n" << std::flush;
}

void ArtifactWriter::on_round(const RoundMetrics& m, std::span<const Event> events) {
  for (const Event& e : events) events_ << format_event(e) << "\n";
  events_.flush();
  if (m.round == 0) return;
  metrics_ << format_metrics_row(m) << "\n" << std::flush;
  trajectory_ << m.round << " " << hex(m.global_fingerprint) << "\n" << std::flush;
}

std::string summary_csv(const Summary& s) {
  return "rounds_averaged,beta_r,beta_win,beta_true,acc,beta_guard\n" +
         std::to_string(s.rounds_averaged) + "," + fmt(s.beta_r) + "," +
         fmt(s.beta_win) + "," + fmt(s.beta_true) + "," + fmt(s.acc) + "," +
         fmt(s.beta_guard) + "\n";
}

void ArtifactWriter::finish(const RunArtifact& run) {
  open_out(fs::path(dir_) / "summary.csv") << summary_csv(run.summary);

  nlohmann::json manifest;
  {
    std::ifstream in(fs::path(dir_) / "manifest.json");
    manifest = nlohmann::json::parse(in);
  }
  nlohmann::json behaviors = nlohmann::json::array();
  for (Behavior b : run.behaviors) behaviors.push_back(to_string(b));
  manifest["behaviors"] = behaviors;
  nlohmann::json private_scores = nlohmann::json::array();
  for (const ClientState& c : run.clients) private_scores.push_back(c.private_score);
  manifest["private_scores"] = private_scores;
  manifest["rounds_completed"] = run.server.round;
  open_out(fs::path(dir_) / "manifest.json") << manifest.dump(2) << "\n";

  nlohmann::json models;
  models["global"] = params_json(run.server.global);
  nlohmann::json adapted = nlohmann::json::object();
  for (const ClientState& c : run.clients) {
    if (c.adapted) adapted[std::to_string(c.client_id)] = params_json(*c.adapted);
  }
  models["adapted"] = adapted;
  open_out(fs::path(dir_) / "models.json") << models.dump() << "\n";
}

LoadedRun load_run(const std::string& dir) {
  LoadedRun run;
  run.dir = dir;
  std::ifstream manifest_in(fs::path(dir) / "manifest.json");
  if (!manifest_in) throw std::runtime_error("no manifest.json in " + dir);
  const nlohmann::json manifest = nlohmann::json::parse(manifest_in);
  run.num_clients = manifest.at("config").at("clients").at("N").get<int>();
  run.rounds = manifest.at("config").at("rounds").get<int>();

  std::ifstream metrics(fs::path(dir) / "metrics.csv");
  if (!metrics) throw std::runtime_error("no metrics.csv in " + dir);
  std::string line;
  std::getline(metrics, line);
  if (line != kMetricsHeader) throw std::runtime_error("unexpected metrics header in " + dir);
  while (std::getline(metrics, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 8) throw std::runtime_error("malformed metrics row in " + dir);
    MetricsRow row;
    row.round = std::stoi(cells[0]);
    row.beta_r = std::stod(cells[1]);
    row.beta_win = std::stod(cells[2]);
    row.beta_true = parse_opt(cells[3]);
    row.acc = parse_opt(cells[4]);
    row.beta_guard = parse_opt(cells[5]);
    row.nfl_flag = cells[6] == "1";
    row.event = cells[7];
    run.metrics.push_back(std::move(row));
  }
  std::ifstream traj(fs::path(dir) / "trajectory.txt");
  while (std::getline(traj, line)) {
    const auto cells = split(line, ' ');
    if (cells.size() == 2) run.trajectory.push_back(cells[1]);
  }
  return run;
}

CompareReport compare_runs(const LoadedRun& a, const LoadedRun& b) {
  if (a.num_clients != b.num_clients || a.rounds != b.rounds) {
    throw ConfigError("artifacts differ in N or R and cannot be compared");
  }
  CompareReport out;
  const std::size_t n = std::min(a.metrics.size(), b.metrics.size());
  for (std::size_t i = 0; i < n; ++i) {
    RoundDelta d;
    d.round = a.metrics[i].round;
    if (a.metrics[i].acc && b.metrics[i].acc) d.acc = *b.metrics[i].acc - *a.metrics[i].acc;
    if (a.metrics[i].beta_true && b.metrics[i].beta_true) {
      d.beta = *b.metrics[i].beta_true - *a.metrics[i].beta_true;
    }
    out.per_round.push_back(d);
  }
  auto tail_mean = [](const LoadedRun& run, auto field) -> std::optional<double> {
    const std::size_t n = std::min<std::size_t>(10, run.metrics.size());
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = run.metrics.size() - n; i < run.metrics.size(); ++i) {
      if (const auto& v = run.metrics[i].*field; v) {
        sum += *v;
        ++count;
      }
    }
    if (count == 0) return std::nullopt;
    return sum / count;
  };
  auto delta = [&](auto field) -> std::optional<double> {
    const auto x = tail_mean(a, field);
    const auto y = tail_mean(b, field);
    if (!x || !y) return std::nullopt;
    return *y - *x;
  };
  out.final_acc_delta = delta(&MetricsRow::acc);
  out.final_beta_delta = delta(&MetricsRow::beta_true);
  out.final_beta_guard_delta = delta(&MetricsRow::beta_guard);
  out.trajectory_identical = !a.trajectory.empty() && a.trajectory == b.trajectory;
  return out;
}

std::string format_compare(const CompareReport& r) {
  std::ostringstream os;
  os << "round,acc_delta,beta_delta\n";
  for (const RoundDelta& d : r.per_round) {
    os << d.round << "," << fmt(d.acc) << "," << fmt(d.beta) << "\n";
  }
  os << "final_acc_delta," << fmt(r.final_acc_delta) << "\n";
  os << "final_beta_delta," << fmt(r.final_beta_delta) << "\n";
  os << "final_beta_guard_delta," << fmt(r.final_beta_guard_delta) << "\n";
  os << "global_trajectory_identical," << (r.trajectory_identical ? "true" : "false")
     << "\n";
  return os.str();
}

}  // namespace nflsim
