#include "cfplan/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace cfplan {

namespace {

Json vec_json(const Vec2& v) { return Json::array({v.x, v.y}); }

Vec2 vec_from(const Json& j) {
  if (!j.is_array() || j.size() != 2) {
    throw std::invalid_argument("expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

Json points_json(std::span<const Vec2> pts) {
  Json out = Json::array();
  for (const Vec2& p : pts) {
    out.push_back(vec_json(p));
  }
  return out;
}

std::vector<Vec2> points_from(const Json& j) {
  std::vector<Vec2> out;
  for (const Json& p : j) {
    out.push_back(vec_from(p));
  }
  return out;
}

Json command_json(const DrivingCommand& c) {
  return {{"speed", to_string(c.speed_decision)}, {"direction", to_string(c.direction_decision)}};
}

DrivingCommand command_from(const Json& j) {
  return {parse_speed_decision(j.at("speed").get<std::string>()),
          parse_direction_decision(j.at("direction").get<std::string>())};
}

Json meta_json(const MetaActions& m) {
  return {{"short_term", command_json(m.short_term)}, {"long_term", command_json(m.long_term)}};
}

MetaActions meta_from(const Json& j) { return {command_from(j.at("short_term")), command_from(j.at("long_term"))}; }

Json outcomes_json(std::span<const CounterfactualOutcome> xs) {
  Json out = Json::array();
  for (const auto& o : xs) {
    out.push_back({{"meta_actions", meta_json(o.meta_actions)}, {"pdms", o.pdms}});
  }
  return out;
}

std::vector<CounterfactualOutcome> outcomes_from(const Json& j) {
  std::vector<CounterfactualOutcome> out;
  for (const Json& o : j) {
    out.push_back({meta_from(o.at("meta_actions")), o.at("pdms").get<double>()});
  }
  return out;
}

Json safety_json(const SafetyLabel& l) { return {{"label", to_string(l.value)}, {"ttc_min", l.ttc_min}}; }

SafetyLabel safety_from(const Json& j) {
  return {parse_label(j.at("label").get<std::string>()), j.at("ttc_min").get<double>()};
}

const Json& object_at(const Json& j, const char* key) {
  const Json& v = j.at(key);
  if (!v.is_object()) {
    throw std::invalid_argument(std::string("field '") + key + "' must be an object");
  }
  return v;
}

}  // namespace

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

std::string_view to_string(Label l) { return l == Label::Pos ? "Pos" : "Neg"; }

Label parse_label(std::string_view name) {
  if (name == "Pos") {
    return Label::Pos;
  }
  if (name == "Neg") {
    return Label::Neg;
  }
  throw std::invalid_argument("unknown label: " + std::string(name));
}

std::string_view to_string(MemberRole r) {
  switch (r) {
    case MemberRole::sampled:
      return "sampled";
    case MemberRole::refined:
      return "refined";
    case MemberRole::anchor_pos:
      return "anchor_pos";
    case MemberRole::anchor_neg:
      return "anchor_neg";
  }
  return "sampled";
}

MemberRole parse_member_role(std::string_view name) {
  for (MemberRole r : {MemberRole::sampled, MemberRole::refined, MemberRole::anchor_pos, MemberRole::anchor_neg}) {
    if (to_string(r) == name) {
      return r;
    }
  }
  throw std::invalid_argument("unknown member role: " + std::string(name));
}

Json to_json(const Trajectory& t) {
  Json wps = Json::array();
  for (const Waypoint& w : t.waypoints()) {
    wps.push_back(Json::array({w.x, w.y, w.t}));
  }
  return {{"rate_hz", t.rate_hz()}, {"waypoints", std::move(wps)}};
}

Trajectory trajectory_from_json(const Json& j) {
  std::vector<Waypoint> wps;
  for (const Json& w : j.at("waypoints")) {
    if (!w.is_array() || w.size() != 3) {
      throw std::invalid_argument("waypoint must be [x, y, t]");
    }
    wps.push_back({w[0].get<double>(), w[1].get<double>(), w[2].get<double>()});
  }
  return Trajectory(std::move(wps), j.at("rate_hz").get<double>());
}

Json to_json(const Scene& s) {
  Json agents = Json::array();
  for (const Agent& a : s.agents) {
    agents.push_back({{"id", a.id},
                      {"kind", to_string(a.kind)},
                      {"length", a.footprint.length},
                      {"width", a.footprint.width},
                      {"trajectory", to_json(a.scripted_trajectory)}});
  }
  Json area = Json::array();
  for (const Polygon& p : s.map.drivable_area) {
    area.push_back(points_json(p));
  }
  return {{"seed", s.seed},
          {"template", to_string(s.scenario)},
          {"ego",
           {{"position", vec_json(s.ego.position)},
            {"heading", s.ego.heading},
            {"speed", s.ego.speed},
            {"length", s.ego.footprint.length},
            {"width", s.ego.footprint.width}}},
          {"ego_history", to_json(s.ego_history)},
          {"agents", std::move(agents)},
          {"map",
           {{"centerline", points_json(s.map.centerline.points())},
            {"lane_width", s.map.lane_width},
            {"drivable_area", std::move(area)}}},
          {"command", command_json(s.command)},
          {"observed_future", to_json(s.observed_future)}};
}

Scene scene_from_json(const Json& j) {
  Scene s;
  s.seed = j.at("seed").get<std::int64_t>();
  s.scenario = parse_template(j.at("template").get<std::string>());
  const Json& ego = object_at(j, "ego");
  s.ego.position = vec_from(ego.at("position"));
  s.ego.heading = ego.at("heading").get<double>();
  s.ego.speed = ego.at("speed").get<double>();
  s.ego.footprint = {ego.at("length").get<double>(), ego.at("width").get<double>()};
  s.ego_history = trajectory_from_json(j.at("ego_history"));
  for (const Json& a : j.at("agents")) {
    Agent agent;
    agent.id = a.at("id").get<int>();
    agent.kind = parse_agent_kind(a.at("kind").get<std::string>());
    agent.footprint = {a.at("length").get<double>(), a.at("width").get<double>()};
    agent.scripted_trajectory = trajectory_from_json(a.at("trajectory"));
    s.agents.push_back(std::move(agent));
  }
  const Json& map = object_at(j, "map");
  s.map.centerline = Polyline(points_from(map.at("centerline")));
  s.map.lane_width = map.at("lane_width").get<double>();
  for (const Json& p : map.at("drivable_area")) {
    s.map.drivable_area.push_back(points_from(p));
  }
  s.command = command_from(j.at("command"));
  s.observed_future = trajectory_from_json(j.at("observed_future"));
  validate_scene(s);
  return s;
}

Json to_json(const NegativeAnalysisBlock& b) {
  Json corr = Json::array();
  for (const WaypointCorrection& c : b.actionable_correction) {
    corr.push_back({{"t", c.t}, {"heading", c.heading}, {"d_long", c.d_long}, {"d_lat", c.d_lat}});
  }
  const auto& ri = b.risk_identification;
  const auto& fa = b.failure_attribution;
  return {{"risk_identification",
           {{"unsafe", ri.unsafe}, {"max_deviation", ri.max_deviation}, {"mean_deviation", ri.mean_deviation}}},
          {"failure_attribution",
           {{"longitudinal_error", fa.longitudinal_error},
            {"lateral_error", fa.lateral_error},
            {"primary_axis", fa.primary_axis == ErrorAxis::longitudinal ? "longitudinal" : "lateral"}}},
          {"counterfactual_analysis", outcomes_json(b.counterfactual_analysis)},
          {"actionable_correction", std::move(corr)},
          {"quality",
           {{"all_candidates_zero", b.quality.all_candidates_zero},
            {"counterfactual_unsafe", b.quality.counterfactual_unsafe}}}};
}

NegativeAnalysisBlock analysis_from_json(const Json& j) {
  NegativeAnalysisBlock b;
  const Json& ri = object_at(j, "risk_identification");
  b.risk_identification = {ri.at("unsafe").get<bool>(), ri.at("max_deviation").get<double>(),
                           ri.at("mean_deviation").get<double>()};
  const Json& fa = object_at(j, "failure_attribution");
  const std::string axis = fa.at("primary_axis").get<std::string>();
  if (axis != "longitudinal" && axis != "lateral") {
    throw std::invalid_argument("unknown error axis: " + axis);
  }
  b.failure_attribution = {fa.at("longitudinal_error").get<double>(), fa.at("lateral_error").get<double>(),
                           axis == "longitudinal" ? ErrorAxis::longitudinal : ErrorAxis::lateral};
  b.counterfactual_analysis = outcomes_from(j.at("counterfactual_analysis"));
  for (const Json& c : j.at("actionable_correction")) {
    b.actionable_correction.push_back({c.at("t").get<double>(), c.at("heading").get<double>(),
                                       c.at("d_long").get<double>(), c.at("d_lat").get<double>()});
  }
  const Json& q = object_at(j, "quality");
  b.quality = {q.at("all_candidates_zero").get<bool>(), q.at("counterfactual_unsafe").get<bool>()};
  return b;
}

Json to_json(const CotRecord& c) {
  const auto& d = c.scene_description;
  return {{"scene_description",
           {{"vehicles", d.vehicles},
            {"pedestrians", d.pedestrians},
            {"cyclists", d.cyclists},
            {"ego_speed", d.ego_speed},
            {"command", command_json(d.command)}}},
          {"critical_object", c.critical_object ? Json(*c.critical_object) : Json(nullptr)},
          {"risk_estimate", safety_json(c.risk_estimate)},
          {"counterfactual_reasoning", outcomes_json(c.counterfactual_reasoning)},
          {"meta_actions", meta_json(c.meta_actions)}};
}

CotRecord cot_from_json(const Json& j) {
  CotRecord c;
  const Json& d = object_at(j, "scene_description");
  c.scene_description = {d.at("vehicles").get<int>(), d.at("pedestrians").get<int>(), d.at("cyclists").get<int>(),
                         d.at("ego_speed").get<double>(), command_from(d.at("command"))};
  if (const Json& co = j.at("critical_object"); !co.is_null()) {
    c.critical_object = co.get<int>();
  }
  c.risk_estimate = safety_from(j.at("risk_estimate"));
  c.counterfactual_reasoning = outcomes_from(j.at("counterfactual_reasoning"));
  c.meta_actions = meta_from(j.at("meta_actions"));
  return c;
}

Json to_json(const CspRecord& r) {
  return {{"scene", to_json(r.scene)},
          {"label", to_string(r.label.value)},
          {"ttc_min", r.label.ttc_min},
          {"tau_pos", to_json(r.tau_pos)},
          {"tau_neg", r.tau_neg ? to_json(*r.tau_neg) : Json(nullptr)},
          {"analysis", r.analysis ? to_json(*r.analysis) : Json(nullptr)},
          {"cot", to_json(r.cot)}};
}

CspRecord record_from_json(const Json& j) {
  CspRecord r;
  r.scene = scene_from_json(j.at("scene"));
  r.label = {parse_label(j.at("label").get<std::string>()), j.at("ttc_min").get<double>()};
  r.tau_pos = trajectory_from_json(j.at("tau_pos"));
  if (const Json& n = j.at("tau_neg"); !n.is_null()) {
    r.tau_neg = trajectory_from_json(n);
  }
  if (const Json& a = j.at("analysis"); !a.is_null()) {
    r.analysis = analysis_from_json(a);
  }
  r.cot = cot_from_json(j.at("cot"));
  if ((r.label.value == Label::Neg) != r.tau_neg.has_value()) {
    throw std::invalid_argument("tau_neg must be present exactly for Neg records");
  }
  return r;
}

Json to_json(const TraceRecord& r) {
  return {{"step", r.step},         {"stage", r.stage},   {"loss_total", r.loss_total}, {"loss_text", r.loss_text},
          {"loss_traj", r.loss_traj}, {"alpha", r.alpha}, {"grad_norm", r.grad_norm}};
}

TraceRecord sft_trace_from_json(const Json& j) {
  TraceRecord r;
  r.step = j.at("step").get<std::size_t>();
  r.stage = j.at("stage").get<int>();
  r.loss_total = j.at("loss_total").get<double>();
  r.loss_text = j.at("loss_text").get<double>();
  r.loss_traj = j.at("loss_traj").get<double>();
  r.alpha = j.at("alpha").get<double>();
  r.grad_norm = j.at("grad_norm").get<double>();
  return r;
}

Json to_json(const GrpoTraceRecord& r) {
  Json members = Json::array();
  for (std::size_t i = 0; i < r.roles.size(); ++i) {
    members.push_back({{"role", to_string(r.roles[i])}, {"reward", r.rewards[i]}, {"advantage", r.advantages[i]}});
  }
  Scene tmp;
  tmp.seed = r.scene_seed;
  tmp.scenario = r.scenario;
  return {{"step", r.step},
          {"epoch", r.epoch},
          {"scene_id", scene_id(tmp)},
          {"members", std::move(members)},
          {"max_sampled_reward", r.max_sampled_reward},
          {"refinement_triggered", r.refinement_triggered},
          {"refined_count", r.refined_count},
          {"loss", r.loss},
          {"grad_norm_pooling", r.grad_norm_pooling},
          {"grad_norm_action", r.grad_norm_action}};
}

GrpoTraceRecord grpo_trace_from_json(const Json& j) {
  GrpoTraceRecord r;
  r.step = j.at("step").get<std::size_t>();
  r.epoch = j.at("epoch").get<int>();
  const std::string id = j.at("scene_id").get<std::string>();
  const auto slash = id.find('/');
  if (slash == std::string::npos) {
    throw std::invalid_argument("scene_id must be template/seed");
  }
  r.scenario = parse_template(id.substr(0, slash));
  r.scene_seed = std::stoll(id.substr(slash + 1));
  for (const Json& m : j.at("members")) {
    r.roles.push_back(parse_member_role(m.at("role").get<std::string>()));
    r.rewards.push_back(m.at("reward").get<double>());
    r.advantages.push_back(m.at("advantage").get<double>());
  }
  r.max_sampled_reward = j.at("max_sampled_reward").get<double>();
  r.refinement_triggered = j.at("refinement_triggered").get<bool>();
  r.refined_count = j.at("refined_count").get<std::size_t>();
  r.loss = j.at("loss").get<double>();
  r.grad_norm_pooling = j.at("grad_norm_pooling").get<double>();
  r.grad_norm_action = j.at("grad_norm_action").get<double>();
  return r;
}

Json to_json(const EvalReport& r) {
  return {{"pdms", r.mean_pdms},       {"nc", r.mean_sub.nc},           {"dac", r.mean_sub.dac},
          {"ep", r.mean_sub.ep},       {"ttc", r.mean_sub.ttc},         {"comfort", r.mean_sub.comfort},
          {"l2_1s", r.l2_at_1s},       {"l2_4s", r.l2_at_4s},           {"fde", r.fde},
          {"coll_rate", r.collision_rate}, {"n", r.sample_count}};
}

namespace {

template <class T, class F>
std::vector<T> read_lines(std::string_view text, F&& decode) {
  std::vector<T> out;
  std::size_t line = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view row = text.substr(pos, end - pos);
    pos = end + 1;
    ++line;
    if (row.find_first_not_of(" \t\r") == std::string_view::npos) {
      continue;
    }
    const Json j = Json::parse(row.begin(), row.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ParseError(line, "not a JSON object");
    }
    try {
      out.push_back(decode(j));
    } catch (const Json::exception& e) {
      throw ParseError(line, e.what());
    } catch (const std::invalid_argument& e) {
      throw ParseError(line, e.what());
    }
  }
  return out;
}

}  // namespace

std::string scene_id(const Scene& s) { return std::string(to_string(s.scenario)) + "/" + std::to_string(s.seed); }

std::string to_jsonl(std::span<const Json> records) {
  std::string out;
  for (const Json& j : records) {
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<Json> parse_jsonl(std::string_view text) {
  return read_lines<Json>(text, [](const Json& j) { return j; });
}

std::string write_scenes(std::span<const Scene> scenes) {
  std::string out;
  for (const Scene& s : scenes) {
    out += to_json(s).dump();
    out += '\n';
  }
  return out;
}

std::vector<Scene> read_scenes(std::string_view text) { return read_lines<Scene>(text, scene_from_json); }

std::string write_records(std::span<const CspRecord> records) {
  std::string out;
  for (const CspRecord& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<CspRecord> read_records(std::string_view text) { return read_lines<CspRecord>(text, record_from_json); }

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string report_csv_row(const EvalReport& r) {
  const double vals[] = {r.mean_pdms, r.mean_sub.nc, r.mean_sub.dac, r.mean_sub.ep, r.mean_sub.ttc,
                         r.mean_sub.comfort, r.l2_at_1s, r.l2_at_4s, r.fde, r.collision_rate};
  std::string out;
  for (double v : vals) {
    out += format_double(v);
    out += ',';
  }
  out += std::to_string(r.sample_count);
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) {
    throw IoError("read failed: " + path.string());
  }
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot write " + tmp.string());
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      throw IoError("write failed: " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

}  // namespace cfplan
