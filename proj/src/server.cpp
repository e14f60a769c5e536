#include "vdg/server.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace vdg {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

json vec3(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json error_reply(const json& id, const std::string& reason) {
  return {{"type", "err"}, {"id", id}, {"reason", reason}};
}

double number(const json& msg, const char* key) {
  if (!msg.contains(key) || !msg[key].is_number()) throw SchemaError(std::string(key) + ": expected a number");
  const double v = msg[key].get<double>();
  if (!std::isfinite(v)) throw SchemaError(std::string(key) + ": must be finite");
  return v;
}

Eigen::Vector3d vector3(const json& msg, const char* key) {
  if (!msg.contains(key)) throw SchemaError(std::string(key) + ": missing field");
  const auto v = as_vec3(msg[key], key);
  if (!v.allFinite()) throw SchemaError(std::string(key) + ": must be finite");
  return v;
}

ForcePoint force_point(const json& v, const std::string& where) {
  if (v == "tip") return ForcePoint::tip;
  if (v == "base") return ForcePoint::base;
  throw SchemaError(where + ": expected \"tip\" or \"base\"");
}

void check_fields(const json& msg, std::initializer_list<const char*> allowed) {
  for (auto it = msg.begin(); it != msg.end(); ++it) {
    if (it.key() == "type" || it.key() == "id") continue;
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; }) ==
        allowed.end())
      throw SchemaError(it.key() + ": unknown field");
  }
}

}  // namespace

json state_message(const Snapshot& s) {
  json q = json::array();
  for (Eigen::Index i = 0; i < s.q.size(); ++i) q.push_back(s.q(i));
  json sat = json::array();
  for (bool b : s.torque_sat) sat.push_back(b);
  const auto& e = s.energy;
  return {{"type", "state"},
          {"t", s.t},
          {"q", q},
          {"q_v", s.q_v},
          {"tip", vec3(s.tip)},
          {"tip_measured", vec3(s.tip_measured)},
          {"base", vec3(s.base)},
          {"axis", {{"origin", vec3(s.axis_origin)}, {"dir", vec3(s.axis_dir)}}},
          {"o_tip", vec3(s.o_tip)},
          {"o_base", vec3(s.o_base)},
          {"energy",
           {{"robot", e.e_robot},
            {"drill", e.e_drill_kinetic},
            {"buffer", e.e_buffer},
            {"spring_tip", e.e_spring_tip},
            {"spring_base", e.e_spring_base},
            {"total", e.total}}},
          {"status", to_string(s.status)},
          {"torque_sat", sat}};
}

LiveSession::LiveSession(Scenario scenario, int trial)
    : scenario_(std::move(scenario)),
      trial_(trial),
      decimation_(std::max<std::int64_t>(1, std::llround(1.0 / (kStateRate * scenario_.dt)))) {
  scenario_.feed.enabled = false;
  scenario_.validate();
  sim_ = std::make_unique<Simulation>(scenario_, trial_);
}

bool LiveSession::tick() {
  if (paused_) return false;
  sim_->step();
  return ++steps_ % decimation_ == 0;
}

json LiveSession::command(const json& message) {
  const json id = message.is_object() && message.contains("id") ? message["id"] : json(nullptr);
  if (!message.is_object() || !message.contains("type") || !message["type"].is_string())
    return error_reply(id, "message must be an object with a string type");
  const std::string type = message["type"].get<std::string>();
  try {
    if (type == "apply_force") {
      check_fields(message, {"point", "f", "hold_ms"});
      if (paused_) return error_reply(id, "paused");
      const ForcePoint point = force_point(message.value("point", json("tip")), "point");
      const Eigen::Vector3d f = vector3(message, "f");
      const double hold_ms = number(message, "hold_ms");
      if (hold_ms < 0.0) throw SchemaError("hold_ms: must not be negative");
      sim_->apply_force(point, f, hold_ms * 1e-3);
    } else if (type == "move_bone") {
      check_fields(message, {"dp", "daxis", "dangle_rad"});
      if (paused_) return error_reply(id, "paused");
      const Eigen::Vector3d dp = message.contains("dp") ? vector3(message, "dp") : Eigen::Vector3d::Zero();
      const double angle = message.contains("dangle_rad") ? number(message, "dangle_rad") : 0.0;
      const Eigen::Vector3d axis =
          message.contains("daxis") ? vector3(message, "daxis") : Eigen::Vector3d::UnitZ().eval();
      sim_->move_bone(dp, axis, angle);
    } else if (type == "pause") {
      check_fields(message, {});
      paused_ = true;
    } else if (type == "resume") {
      check_fields(message, {});
      paused_ = false;
    } else if (type == "reset") {
      check_fields(message, {});
      sim_ = std::make_unique<Simulation>(scenario_, trial_);
      steps_ = 0;
      paused_ = false;
    } else if (type == "set_param") {
      check_fields(message, {"path", "value"});
      if (!message.contains("path") || !message["path"].is_string())
        throw SchemaError("path: expected a string");
      if (!message.contains("value")) throw SchemaError("value: missing field");
      set_param(message["path"].get<std::string>(), message["value"]);
    } else {
      return error_reply(id, "unknown command type '" + type + "'");
    }
  } catch (const std::exception& e) {
    return error_reply(id, e.what());
  }
  return {{"type", "ack"}, {"id", id}};
}

void LiveSession::set_param(const std::string& path, const json& value) {
  auto scalar = [&](double lo, double hi) {
    if (!value.is_number()) throw SchemaError(path + ": expected a number");
    const double v = value.get<double>();
    if (!(v >= lo && v <= hi)) throw SchemaError(path + ": out of range");
    return v;
  };
  if (path == "outer_loop.k_i") {
    const double v = scalar(0.0, 1e3);
    sim_->outer_params().k_i = v;
    scenario_.outer.k_i = v;
  } else if (path == "vision.sigma") {
    const double v = scalar(0.0, 0.01);
    sim_->vision_noise().sigma = v;
    scenario_.vision.noise.sigma = v;
  } else if (path == "vision.rot_sigma") {
    const double v = scalar(0.0, 0.1);
    sim_->vision_noise().rot_sigma = v;
    scenario_.vision.noise.rot_sigma = v;
  } else if (path == "vision.dropout_prob") {
    const double v = scalar(0.0, 0.9);
    sim_->vision_noise().dropout_prob = v;
    scenario_.vision.noise.dropout_prob = v;
  } else if (path == "forces") {
    if (!value.is_array()) throw SchemaError("forces: expected an array");
    std::vector<ForceEvent> events;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const std::string w = "forces[" + std::to_string(i) + "]";
      const auto& e = value[i];
      if (!e.is_object()) throw SchemaError(w + ": expected an object");
      ForceEvent ev;
      ev.t_start = require_number(e, "t_start", w);
      ev.t_end = require_number(e, "t_end", w);
      ev.point = e.contains("point") ? force_point(e["point"], w + ".point") : ForcePoint::tip;
      ev.force = require_vec3(e, "force", w);
      events.push_back(ev);
    }
    sim_->set_force_script(events);
    scenario_.forces = std::move(events);
  } else {
    throw SchemaError("parameter not settable: " + path);
  }
}

namespace {

class Hub;

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, Hub& hub, std::size_t depth) : ws_(std::move(socket)), hub_(hub), depth_(depth) {}

  void start();
  /// State messages may be dropped, oldest first; replies are always delivered.
  void send(std::shared_ptr<const std::string> text, bool droppable);
  void close();
  void abort() {
    open_ = false;
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

 private:
  struct Outgoing {
    std::shared_ptr<const std::string> text;
    bool droppable;
  };
  void read();
  void write();

  websocket::stream<beast::tcp_stream> ws_;
  Hub& hub_;
  std::size_t depth_;
  beast::flat_buffer buffer_;
  std::deque<Outgoing> outbox_;
  bool writing_ = false;
  bool open_ = false;
};

struct Command {
  std::weak_ptr<Connection> from;
  json message;
};

class Hub {
 public:
  static constexpr std::size_t kMaxCommands = 1024;

  Hub() : commands_(kMaxCommands + 1) {}

  void join(const std::shared_ptr<Connection>& c) { connections_.push_back(c); }
  void leave(const Connection* c) {
    std::erase_if(connections_, [c](const std::weak_ptr<Connection>& w) {
      const auto s = w.lock();
      return !s || s.get() == c;
    });
  }
  void broadcast(const std::shared_ptr<const std::string>& text) {
    for (const auto& w : connections_)
      if (const auto c = w.lock()) c->send(text, true);
  }
  void close_all() {
    for (const auto& w : connections_)
      if (const auto c = w.lock()) c->close();
  }
  void abort_all() {
    for (const auto& w : connections_)
      if (const auto c = w.lock()) c->abort();
    connections_.clear();
  }

  void submit(const std::shared_ptr<Connection>& from, json message) {
    if (commands_.size() >= kMaxCommands) {
      const json id = message.is_object() && message.contains("id") ? message["id"] : json(nullptr);
      from->send(std::make_shared<const std::string>(error_reply(id, "busy").dump()), false);
      return;
    }
    commands_.push({from, std::move(message)});
  }
  DropOldestQueue<Command>& commands() { return commands_; }

 private:
  std::vector<std::weak_ptr<Connection>> connections_;
  DropOldestQueue<Command> commands_;
};

void Connection::start() {
  ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
  ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
    if (ec) return;
    self->open_ = true;
    self->hub_.join(self);
    self->read();
  });
}

void Connection::read() {
  ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
    if (ec) {
      self->open_ = false;
      self->hub_.leave(self.get());
      return;
    }
    const std::string text = beast::buffers_to_string(self->buffer_.data());
    self->buffer_.consume(self->buffer_.size());
    json message = json::parse(text, nullptr, false);
    if (message.is_discarded())
      self->send(std::make_shared<const std::string>(error_reply(nullptr, "malformed JSON").dump()), false);
    else
      self->hub_.submit(self, std::move(message));
    self->read();
  });
}

void Connection::send(std::shared_ptr<const std::string> text, bool droppable) {
  if (!open_) return;
  if (droppable) {
    std::size_t queued = 0;
    for (std::size_t i = writing_ ? 1 : 0; i < outbox_.size(); ++i) queued += outbox_[i].droppable;
    if (queued >= depth_) {
      for (auto it = outbox_.begin() + (writing_ ? 1 : 0); it != outbox_.end(); ++it)
        if (it->droppable) {
          outbox_.erase(it);
          break;
        }
    }
  }
  outbox_.push_back({std::move(text), droppable});
  if (!writing_) write();
}

void Connection::write() {
  if (outbox_.empty() || !open_) {
    writing_ = false;
    return;
  }
  writing_ = true;
  ws_.text(true);
  ws_.async_write(net::buffer(*outbox_.front().text), [self = shared_from_this()](beast::error_code ec, std::size_t) {
    self->outbox_.pop_front();
    if (ec) {
      self->open_ = false;
      self->writing_ = false;
      self->outbox_.clear();
      self->hub_.leave(self.get());
      return;
    }
    self->write();
  });
}

void Connection::close() {
  if (!open_) return;
  open_ = false;
  ws_.async_close(websocket::close_code::going_away, [self = shared_from_this()](beast::error_code) {});
}

}  // namespace

struct StateServer::Impl {
  Impl(Scenario sc, ServeOptions opt)
      : options(std::move(opt)),
        live(std::move(sc), options.trial),
        acceptor(ioc),
        hub(),
        states(options.queue_depth) {}

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<Connection>(std::move(socket), hub, options.queue_depth)->start();
      accept();
    });
  }

  void publish(const Snapshot& s) {
    states.push(std::make_shared<const std::string>(state_message(s).dump()));
    if (!drain_posted.exchange(true))
      net::post(ioc, [this] {
        drain_posted = false;
        while (auto text = states.pop()) hub.broadcast(*text);
      });
  }

  void simulate() {
    using clock = std::chrono::steady_clock;
    const double dt = dt_;
    auto last = clock::now();
    auto next_paused_state = last;
    double budget = 0.0;
    publish(live.snapshot());
    while (!stopping) {
      while (auto c = hub.commands().pop()) {
        const json reply = live.command(c->message);
        net::post(ioc, [from = c->from, text = std::make_shared<const std::string>(reply.dump())] {
          if (const auto conn = from.lock()) conn->send(text, false);
        });
      }
      const auto now = clock::now();
      budget = std::min(budget + std::chrono::duration<double>(now - last).count(), 0.1);
      last = now;
      if (live.paused()) {
        budget = 0.0;
        if (now >= next_paused_state) {
          publish(live.snapshot());
          next_paused_state = now + std::chrono::milliseconds(50);
        }
      }
      int steps = 0;
      while (budget >= dt && !live.paused() && steps < 10) {
        budget -= dt;
        ++steps;
        if (live.tick()) publish(live.snapshot());
      }
      std::this_thread::sleep_for(std::chrono::microseconds(500));
    }
  }

  void shutdown() {
    if (shut_down.exchange(true)) return;
    net::post(ioc, [this] {
      beast::error_code ec;
      acceptor.close(ec);
      hub.close_all();
      if (signals) signals->cancel();
      work.reset();
      linger.expires_after(std::chrono::seconds(1));
      linger.async_wait([this](beast::error_code ec) {
        if (!ec) ioc.stop();
      });
    });
  }

  ServeOptions options;
  LiveSession live;
  double dt_ = 1e-3;
  net::io_context ioc;
  tcp::acceptor acceptor;
  Hub hub;
  DropOldestQueue<std::shared_ptr<const std::string>> states;
  std::atomic<bool> drain_posted{false};
  std::atomic<bool> stopping{false};
  std::atomic<bool> shut_down{false};
  net::steady_timer linger{ioc};
  std::unique_ptr<net::signal_set> signals;
  std::optional<net::executor_work_guard<net::io_context::executor_type>> work;
};

StateServer::StateServer(Scenario scenario, ServeOptions options) {
  const double dt = scenario.dt;
  impl_ = std::make_unique<Impl>(std::move(scenario), std::move(options));
  impl_->dt_ = dt;
  beast::error_code ec;
  const tcp::endpoint endpoint(net::ip::make_address(impl_->options.address, ec), impl_->options.port);
  if (ec) throw Error("invalid address '" + impl_->options.address + "'");
  impl_->acceptor.open(endpoint.protocol());
  impl_->acceptor.set_option(net::socket_base::reuse_address(true));
  impl_->acceptor.bind(endpoint, ec);
  if (ec == net::error::address_in_use)
    throw PortInUse("port " + std::to_string(impl_->options.port) + " is already in use");
  if (ec) throw Error("cannot bind port " + std::to_string(impl_->options.port) + ": " + ec.message());
  impl_->acceptor.listen(net::socket_base::max_listen_connections);
}

StateServer::~StateServer() = default;

unsigned short StateServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void StateServer::run(bool handle_signals) {
  auto& m = *impl_;
  m.work.emplace(m.ioc.get_executor());
  if (handle_signals) {
    m.signals = std::make_unique<net::signal_set>(m.ioc, SIGINT, SIGTERM);
    m.signals->async_wait([this](beast::error_code ec, int) {
      if (!ec) stop();
    });
  }
  m.accept();
  std::jthread sim([&m] { m.simulate(); });
  m.ioc.run();
  m.stopping = true;
  m.hub.abort_all();
}

void StateServer::stop() {
  impl_->stopping = true;
  impl_->shutdown();
}

}  // namespace vdg
