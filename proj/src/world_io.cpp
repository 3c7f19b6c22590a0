#include <fstream>
#include <sstream>

#include "uavllm/error.hpp"
#include "uavllm/world.hpp"

namespace uavllm {

namespace {

constexpr const char* kWorldSchema = "uav-world/1";

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorCode::kWorldFileInvalid, "invalid world document: " + what);
}

double number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) invalid(std::string("missing number '") + key + "'");
  return j.at(key).get<double>();
}

}  // namespace

nlohmann::json vec_to_json(Vec3 v) { return nlohmann::json::array({v.x, v.y, v.z}); }

Vec3 vec_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() ||
      !j[2].is_number()) {
    throw Error(ErrorCode::kInvalidArguments, "expected a 3-element numeric array");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

nlohmann::json obstacle_to_json(const Obstacle& ob) {
  nlohmann::json j;
  j["id"] = ob.id;
  if (ob.is_cube()) {
    j["type"] = "cube";
    j["center"] = vec_to_json(ob.cube().center);
    j["size"] = vec_to_json(ob.cube().size);
  } else {
    j["type"] = "sphere";
    j["center"] = vec_to_json(ob.sphere().center);
    j["radius"] = ob.sphere().radius;
  }
  j["clearance"] = ob.clearance;
  return j;
}

nlohmann::json world_to_json(const WorldDescription& world) {
  nlohmann::json j;
  j["schema"] = kWorldSchema;
  j["extent"] = {{"x_min", world.extent.x_min}, {"x_max", world.extent.x_max},
                 {"y_min", world.extent.y_min}, {"y_max", world.extent.y_max},
                 {"z_ceiling", world.extent.z_ceiling}};
  j["resolution"] = world.resolution;
  j["obstacles"] = nlohmann::json::array();
  for (const Obstacle& ob : world.obstacles) j["obstacles"].push_back(obstacle_to_json(ob));
  return j;
}

WorldDescription world_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) invalid("top level must be an object");
  if (doc.contains("schema") && doc.at("schema") != kWorldSchema) invalid("unsupported schema");
  if (!doc.contains("extent") || !doc.at("extent").is_object()) invalid("missing 'extent'");
  WorldDescription world;
  const auto& e = doc.at("extent");
  world.extent = {number(e, "x_min"), number(e, "x_max"), number(e, "y_min"), number(e, "y_max"),
                  number(e, "z_ceiling")};
  world.resolution = number(doc, "resolution");
  if (doc.contains("obstacles")) {
    if (!doc.at("obstacles").is_array()) invalid("'obstacles' must be an array");
    for (const auto& o : doc.at("obstacles")) {
      if (!o.is_object() || !o.contains("id") || !o.at("id").is_string()) {
        invalid("obstacle without string id");
      }
      Obstacle ob;
      ob.id = o.at("id").get<std::string>();
      ob.clearance = o.contains("clearance") ? number(o, "clearance") : 0.0;
      const std::string type = o.value("type", "");
      try {
        if (type == "cube") {
          ob.shape = Cube{vec_from_json(o.at("center")), vec_from_json(o.at("size"))};
        } else if (type == "sphere") {
          ob.shape = Sphere{vec_from_json(o.at("center")), number(o, "radius")};
        } else {
          invalid("obstacle " + ob.id + " has unknown type '" + type + "'");
        }
      } catch (const nlohmann::json::exception&) {
        invalid("obstacle " + ob.id + " is missing geometry");
      } catch (const Error& err) {
        if (err.code() == ErrorCode::kWorldFileInvalid) throw;
        invalid("obstacle " + ob.id + ": " + err.what());
      }
      world.obstacles.push_back(std::move(ob));
    }
  }
  return world;
}

WorldDescription load_world_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kWorldFileInvalid, "cannot open world file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json doc = nlohmann::json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::kWorldFileInvalid, "world file " + path + " is not JSON");
  return world_from_json(doc);
}

}  // namespace uavllm
