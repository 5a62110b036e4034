#include "lanerl/episode.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace lanerl::bench {

using ordered_json = nlohmann::ordered_json;

void save_episode_log(const EpisodeLog& log, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write episode log: " + file.string());
  ordered_json header{{"type", "header"},
                      {"map", log.map_name},
                      {"seed", log.seed},
                      {"config_digest", log.config_digest},
                      {"route_length", log.route_length},
                      {"max_servo_deg", log.max_servo_deg}};
  out << header.dump() << "\n";
  for (const StepRecord& s : log.steps) {
    ordered_json j{{"type", "step"},     {"t", s.t},
                   {"x", s.x},           {"y", s.y},
                   {"heading", s.heading}, {"v", s.v},
                   {"steer", s.steer_cmd}, {"throttle", s.throttle_cmd},
                   {"steer_applied", s.steer_applied},
                   {"throttle_applied", s.throttle_applied},
                   {"reward", s.reward}, {"collision", s.collision},
                   {"solid", s.crossed_solid}, {"double_solid", s.crossed_double}};
    out << j.dump() << "\n";
  }
  for (const InterventionRecord& iv : log.interventions) {
    ordered_json j{{"type", "intervention"}, {"t", iv.t},       {"x", iv.x},
                   {"y", iv.y},              {"odometer", iv.odometer}, {"kind", iv.kind}};
    out << j.dump() << "\n";
  }
  ordered_json footer{{"type", "end"},
                      {"odometer", log.odometer},
                      {"steps", log.steps.size()},
                      {"route_completed", log.route_completed}};
  out << footer.dump() << "\n";
}

EpisodeLog load_episode_log(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open episode log: " + file.string());
  EpisodeLog log;
  std::string line;
  int line_no = 0;
  bool saw_header = false;
  double prev_t = -1.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error(file.string() + ":" + std::to_string(line_no) +
                               ": malformed record: " + e.what());
    }
    auto ctx = [&] { return file.string() + ":" + std::to_string(line_no); };
    try {
      std::string type = j.at("type");
      if (type == "header") {
        log.map_name = j.at("map");
        log.seed = j.at("seed");
        log.config_digest = j.at("config_digest");
        log.route_length = j.at("route_length");
        log.max_servo_deg = j.at("max_servo_deg");
        saw_header = true;
      } else if (type == "step") {
        StepRecord s;
        s.t = j.at("t");
        s.x = j.at("x");
        s.y = j.at("y");
        s.heading = j.at("heading");
        s.v = j.at("v");
        s.steer_cmd = j.at("steer");
        s.throttle_cmd = j.at("throttle");
        s.steer_applied = j.at("steer_applied");
        s.throttle_applied = j.at("throttle_applied");
        s.reward = j.at("reward");
        s.collision = j.at("collision");
        s.crossed_solid = j.at("solid");
        s.crossed_double = j.at("double_solid");
        if (s.t <= prev_t) {
          throw std::runtime_error(ctx() + ": step time must strictly increase");
        }
        prev_t = s.t;
        log.steps.push_back(s);
      } else if (type == "intervention") {
        InterventionRecord iv;
        iv.t = j.at("t");
        iv.x = j.at("x");
        iv.y = j.at("y");
        iv.odometer = j.at("odometer");
        iv.kind = j.at("kind");
        log.interventions.push_back(std::move(iv));
      } else if (type == "end") {
        log.odometer = j.at("odometer");
        log.route_completed = j.at("route_completed");
      } else {
        throw std::runtime_error(ctx() + ": unknown record type '" + type + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(ctx() + ": " + e.what());
    }
  }
  if (!saw_header) throw std::runtime_error(file.string() + ": missing header record");
  return log;
}

}  // namespace lanerl::bench
