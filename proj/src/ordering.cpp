#include <string>
#include <unordered_set>

#include "uavllm/error.hpp"
#include "uavllm/streams.hpp"

namespace uavllm {

namespace {

std::string_view sense_name(Sense s) { return s == Sense::kDownstream ? "downstream" : "upstream"; }

Sense parse_sense(const std::string& s) {
  if (s == "downstream") return Sense::kDownstream;
  if (s == "upstream") return Sense::kUpstream;
  throw Error(ErrorCode::kMalformedLog, "unknown direction sense '" + s + "'");
}

OrderingReport violation(std::uint64_t call_id, std::string message) {
  return {false, call_id, std::move(message)};
}

}  // namespace

nlohmann::json call_to_json(const StreamCall& c) {
  return {{"call_id", c.call_id},
          {"invocation", c.invocation},
          {"parent", c.parent ? nlohmann::json(*c.parent) : nlohmann::json()},
          {"turn", c.turn},
          {"name", c.name},
          {"args", c.args},
          {"result", c.result},
          {"direction", {{"sense", sense_name(c.direction.sense)}, {"layer", c.direction.layer}}},
          {"sim_time", c.sim_time}};
}

StreamCall call_from_json(const nlohmann::json& j) {
  try {
    StreamCall c;
    c.call_id = j.at("call_id").get<std::uint64_t>();
    c.invocation = j.at("invocation").get<std::uint64_t>();
    if (!j.at("parent").is_null()) c.parent = j.at("parent").get<std::uint64_t>();
    c.turn = j.at("turn").get<std::uint64_t>();
    c.name = j.at("name").get<std::string>();
    c.args = j.at("args");
    c.result = j.at("result");
    c.direction.sense = parse_sense(j.at("direction").at("sense").get<std::string>());
    c.direction.layer = j.at("direction").at("layer").get<int>();
    c.sim_time = j.at("sim_time").get<double>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedLog, std::string("malformed stream record: ") + e.what());
  }
}

OrderingReport validate_ordering(const std::vector<StreamCall>& log) {
  struct Open {
    std::uint64_t invocation;
    Sense sense;
    int layer;  // layer of the last hop
  };
  std::vector<Open> stack;
  std::unordered_set<std::uint64_t> closed;
  const StreamCall* prev = nullptr;
  for (const StreamCall& c : log) {
    if (c.direction.layer < 1 || c.direction.layer > 3) {
      return violation(c.call_id, "layer outside 1..3");
    }
    if (prev) {
      if (c.call_id <= prev->call_id) return violation(c.call_id, "call_id not increasing");
      if (c.sim_time < prev->sim_time) return violation(c.call_id, "sim_time decreased");
      if (c.turn < prev->turn) return violation(c.call_id, "turn decreased");
    }
    prev = &c;

    if (!stack.empty() && stack.back().invocation == c.invocation) {
      Open& top = stack.back();
      if (c.direction.sense == Sense::kDownstream) {
        if (top.sense != Sense::kDownstream || c.direction.layer != top.layer + 1) {
          return violation(c.call_id, "downstream hop out of 1,2,3 order");
        }
        top.layer = c.direction.layer;
      } else {
        const int expected = top.sense == Sense::kDownstream ? top.layer : top.layer - 1;
        if (c.direction.layer != expected) {
          return violation(c.call_id, "upstream hop out of 3,2,1 order");
        }
        top.sense = Sense::kUpstream;
        top.layer = c.direction.layer;
        if (top.layer == 1) {
          closed.insert(top.invocation);
          stack.pop_back();
        }
      }
      continue;
    }

    // A record of any other invocation must open a new one.
    for (const Open& o : stack) {
      if (o.invocation == c.invocation) {
        return violation(c.call_id, "hop interleaved with a nested invocation");
      }
    }
    if (closed.contains(c.invocation)) {
      return violation(c.call_id, "hop after the invocation completed");
    }
    if (c.direction.sense != Sense::kDownstream || c.direction.layer != 1) {
      return violation(c.call_id, "invocation does not begin with a downstream layer-1 hop");
    }
    if (!stack.empty()) {
      const Open& top = stack.back();
      if (!c.parent || *c.parent != top.invocation) {
        return violation(c.call_id, "invocation interleaves with an unfinished one");
      }
      if (top.sense != Sense::kDownstream || top.layer != 1) {
        return violation(c.call_id, "sub-call outside its parent's layer-1 window");
      }
    } else if (c.parent) {
      return violation(c.call_id, "sub-call without an open parent");
    }
    stack.push_back({c.invocation, Sense::kDownstream, 1});
  }
  if (!stack.empty()) {
    return violation(log.back().call_id, "log ends with an unfinished invocation");
  }
  return {};
}

}  // namespace uavllm
