#pragma once

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "screenprune/prune.hpp"

namespace screenprune {

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double test_error_percent = 0.0;
  double sparsity = 0.0;  // pruned fraction of the active prune space
  double learning_rate = 0.0;
  double wall_time_seconds = 0.0;
};

inline std::string metrics_header() { return "epoch,train_loss,test_error,sparsity,lr,seconds"; }

inline std::string metrics_row(const EpochMetrics& m) {
  std::ostringstream os;
  os.precision(10);
  os << m.epoch << ',' << m.train_loss << ',' << m.test_error_percent << ',' << m.sparsity << ','
     << m.learning_rate << ',' << m.wall_time_seconds;
  return os.str();
}

/// Append-only CSV log, one record per epoch.
class MetricsWriter {
public:
  MetricsWriter() = default;
  explicit MetricsWriter(const std::string& path) : out_(path, std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open metrics log: " + path);
    out_ << metrics_header() << "\n";
    out_.flush();
  }

  void append(const EpochMetrics& m) {
    rows.push_back(m);
    if (out_.is_open()) {
      out_ << metrics_row(m) << "\n";
      out_.flush();
    }
  }

  std::vector<EpochMetrics> rows;

private:
  std::ofstream out_;
};

inline std::vector<EpochMetrics> parse_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics log: " + path);
  std::string line;
  std::getline(in, line);
  if (line != metrics_header()) throw std::runtime_error("unexpected metrics header: " + line);
  std::vector<EpochMetrics> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochMetrics m;
    std::istringstream is(line);
    char comma;
    is >> m.epoch >> comma >> m.train_loss >> comma >> m.test_error_percent >> comma >>
        m.sparsity >> comma >> m.learning_rate >> comma >> m.wall_time_seconds;
    if (!is) throw std::runtime_error("unparseable metrics row: " + line);
    rows.push_back(m);
  }
  return rows;
}

/// Line-delimited JSON prune-event log.
class PruneEventLog {
public:
  PruneEventLog() = default;
  explicit PruneEventLog(const std::string& path) : out_(path, std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open prune log: " + path);
  }

  void append(const PruneEvent& e) {
    events.push_back(e);
    if (out_.is_open()) {
      nlohmann::json j = {{"epoch", e.epoch},
                          {"group_id", e.group_id},
                          {"members_before", e.members_before},
                          {"members_after", e.members_after},
                          {"alpha", e.alpha},
                          {"schedule", {{"mode", e.mode},
                                        {"keep_ratio", e.keep_ratio},
                                        {"decay_rate", e.decay_rate},
                                        {"total_epochs", e.total_epochs}}}};
      out_ << j.dump() << "\n";
      out_.flush();
    }
  }

  std::vector<PruneEvent> events;

private:
  std::ofstream out_;
};

inline std::vector<PruneEvent> parse_prune_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open prune log: " + path);
  std::vector<PruneEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    PruneEvent e;
    e.epoch = j.at("epoch").get<std::size_t>();
    e.group_id = j.at("group_id").get<std::string>();
    e.members_before = j.at("members_before").get<std::size_t>();
    e.members_after = j.at("members_after").get<std::size_t>();
    e.alpha = j.at("alpha").get<double>();
    e.mode = j.at("schedule").at("mode").get<std::string>();
    e.keep_ratio = j.at("schedule").at("keep_ratio").get<double>();
    e.decay_rate = j.at("schedule").at("decay_rate").get<double>();
    e.total_epochs = j.at("schedule").at("total_epochs").get<std::size_t>();
    events.push_back(e);
  }
  return events;
}

}  // namespace screenprune
