#include "lanerl/roadmap.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lanerl::sim {

namespace {

std::string marking_name(MarkingKind k) {
  switch (k) {
    case MarkingKind::kDashed: return "dashed";
    case MarkingKind::kSolid: return "solid";
    case MarkingKind::kDoubleSolid: return "double-solid";
  }
  return "?";
}

MarkingKind parse_marking(const std::string& s, const std::string& ctx) {
  if (s == "dashed") return MarkingKind::kDashed;
  if (s == "solid") return MarkingKind::kSolid;
  if (s == "double-solid") return MarkingKind::kDoubleSolid;
  throw std::runtime_error(ctx + ": unknown marking kind '" + s + "'");
}

std::string topology_name(Topology t) {
  switch (t) {
    case Topology::kStraight: return "straight";
    case Topology::kTurn: return "turn";
    case Topology::kComposite: return "composite";
  }
  return "?";
}

Topology parse_topology(const std::string& s, const std::string& ctx) {
  if (s == "straight") return Topology::kStraight;
  if (s == "turn") return Topology::kTurn;
  if (s == "composite") return Topology::kComposite;
  throw std::runtime_error(ctx + ": unknown topology '" + s + "'");
}

}  // namespace

const Lane* RoadMap::lane_by_id(int id) const {
  for (const Lane& lane : lanes) {
    if (lane.id == id) return &lane;
  }
  return nullptr;
}

const Lane& RoadMap::route() const {
  const Lane* lane = lane_by_id(route_lane);
  if (!lane) throw std::runtime_error("map '" + name + "': route lane " +
                                      std::to_string(route_lane) + " does not exist");
  return *lane;
}

void RoadMap::validate() const {
  if (lanes.empty()) throw std::runtime_error("map '" + name + "': no lanes");
  for (const Lane& lane : lanes) {
    std::string ctx = "map '" + name + "' lane " + std::to_string(lane.id);
    if (lane.centerline.size() < 2) throw std::runtime_error(ctx + ": centerline needs >= 2 points");
    if (lane.width <= 0.0) throw std::runtime_error(ctx + ": width must be positive");
    if (!lane.centerline.is_simple()) throw std::runtime_error(ctx + ": centerline self-intersects");
  }
  (void)route();
  for (const ObstacleSpec& ob : obstacles) {
    if (ob.length <= 0.0 || ob.width <= 0.0) {
      throw std::runtime_error("map '" + name + "': obstacle footprint must have positive area");
    }
  }
}

void build_boundaries(RoadMap& map) {
  for (Lane& lane : map.lanes) {
    lane.left_boundary = lane.centerline.offset(0.5 * lane.width);
    lane.right_boundary = lane.centerline.offset(-0.5 * lane.width);
  }
}

RoadMap load_map(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open map file: " + file.string());
  RoadMap map;
  map.name = file.stem().string();
  Lane* lane = nullptr;
  int line_no = 0;
  std::string line;
  auto ctx = [&] { return file.string() + ":" + std::to_string(line_no); };
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "map") {
      ls >> map.name;
    } else if (key == "topology") {
      std::string t;
      ls >> t;
      map.topology = parse_topology(t, ctx());
    } else if (key == "route") {
      if (!(ls >> map.route_lane)) throw std::runtime_error(ctx() + ": route needs a lane id");
    } else if (key == "lane") {
      Lane l;
      std::string drv;
      if (!(ls >> l.id >> l.width >> drv)) {
        throw std::runtime_error(ctx() + ": expected 'lane <id> <width> <ego|alt>'");
      }
      if (drv == "ego") {
        l.drivability = Drivability::kEgo;
      } else if (drv == "alt") {
        l.drivability = Drivability::kAlternative;
      } else {
        throw std::runtime_error(ctx() + ": drivability must be 'ego' or 'alt'");
      }
      map.lanes.push_back(std::move(l));
      lane = &map.lanes.back();
    } else if (key == "marking") {
      if (!lane) throw std::runtime_error(ctx() + ": 'marking' before any lane");
      std::string side, kind;
      if (!(ls >> side >> kind)) throw std::runtime_error(ctx() + ": expected 'marking <left|right> <kind>'");
      MarkingKind mk = parse_marking(kind, ctx());
      if (side == "left") {
        lane->left_marking = mk;
      } else if (side == "right") {
        lane->right_marking = mk;
      } else {
        throw std::runtime_error(ctx() + ": marking side must be 'left' or 'right'");
      }
    } else if (key == "pt") {
      if (!lane) throw std::runtime_error(ctx() + ": 'pt' before any lane");
      geom::Vec2 p;
      if (!(ls >> p.x >> p.y)) throw std::runtime_error(ctx() + ": expected 'pt <x> <y>'");
      auto pts = lane->centerline.points();
      pts.push_back(p);
      lane->centerline = geom::Polyline(std::move(pts));
    } else if (key == "obstacle") {
      ObstacleSpec ob;
      std::string kind;
      if (!(ls >> kind >> ob.position.x >> ob.position.y >> ob.heading >> ob.length >> ob.width)) {
        throw std::runtime_error(ctx() + ": expected 'obstacle <static|moving> <x> <y> <heading> <len> <wid> ...'");
      }
      if (kind == "moving") {
        int n;
        if (!(ls >> ob.speed >> n)) throw std::runtime_error(ctx() + ": moving obstacle needs '<speed> <npts> x y ...'");
        for (int i = 0; i < n; ++i) {
          geom::Vec2 p;
          if (!(ls >> p.x >> p.y)) throw std::runtime_error(ctx() + ": missing waypoint");
          ob.waypoints.push_back(p);
        }
      } else if (kind != "static") {
        throw std::runtime_error(ctx() + ": obstacle kind must be 'static' or 'moving'");
      }
      map.obstacles.push_back(std::move(ob));
    } else {
      throw std::runtime_error(ctx() + ": unknown directive '" + key + "'");
    }
  }
  build_boundaries(map);
  map.validate();
  return map;
}

void save_map(const RoadMap& map, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write map file: " + file.string());
  out << "map " << map.name << "\n";
  out << "topology " << topology_name(map.topology) << "\n";
  out << "route " << map.route_lane << "\n";
  for (const Lane& lane : map.lanes) {
    out << "lane " << lane.id << " " << lane.width << " "
        << (lane.drivability == Drivability::kEgo ? "ego" : "alt") << "\n";
    out << "marking left " << marking_name(lane.left_marking) << "\n";
    out << "marking right " << marking_name(lane.right_marking) << "\n";
    for (const geom::Vec2& p : lane.centerline.points()) {
      out << "pt " << p.x << " " << p.y << "\n";
    }
  }
  for (const ObstacleSpec& ob : map.obstacles) {
    if (ob.waypoints.empty()) {
      out << "obstacle static " << ob.position.x << " " << ob.position.y << " " << ob.heading
          << " " << ob.length << " " << ob.width << "\n";
    } else {
      out << "obstacle moving " << ob.position.x << " " << ob.position.y << " " << ob.heading
          << " " << ob.length << " " << ob.width << " " << ob.speed << " " << ob.waypoints.size();
      for (const geom::Vec2& p : ob.waypoints) out << " " << p.x << " " << p.y;
      out << "\n";
    }
  }
}

}  // namespace lanerl::sim
