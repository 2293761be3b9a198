#include "neyman/service.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include <httplib.h>

#include "neyman/config.hpp"
#include "neyman/montecarlo.hpp"
#include "neyman/population.hpp"

namespace neyman {

namespace fs = std::filesystem;
using nlohmann::json;

int http_status(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::NotFound: return 404;
        case ErrorCode::WrongStage:
        case ErrorCode::IncompleteExperiment: return 409;
        case ErrorCode::CountMismatch:
        case ErrorCode::TooFewObservations:
        case ErrorCode::EmptyArm:
        case ErrorCode::InfiniteVariance:
        case ErrorCode::ZeroBenchmark: return 422;
        default: return 400;
    }
}

ApiResponse error_response(ErrorCode code, const std::string& message, json detail) {
    return {http_status(code), {{"code", std::string(to_string(code))}, {"message", message}, {"detail", detail}}};
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string now_iso() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string random_id(const char* prefix) {
    static std::mutex m;
    static std::mt19937_64 gen{std::random_device{}()};
    std::lock_guard lock(m);
    return prefix + hex64(gen());
}

std::vector<double> number_array(const json& body, const char* key) {
    if (!body.contains(key)) fail(ErrorCode::InvalidArgument, std::string("missing '") + key + "' array");
    const json& a = body.at(key);
    if (!a.is_array()) fail(ErrorCode::InvalidArgument, std::string("'") + key + "' must be an array of numbers");
    std::vector<double> out;
    out.reserve(a.size());
    for (const json& v : a) {
        if (!v.is_number()) fail(ErrorCode::InvalidArgument, std::string("'") + key + "' must hold numbers only");
        out.push_back(v.get<double>());
    }
    return out;
}

std::string payload_digest(const std::vector<double>& treated, const std::vector<double>& control) {
    return hex64(fnv1a64(json{{"control", control}, {"treated", treated}}.dump()));
}

struct Infeasible {
    FeasibilityReport report;
};

DesignConfig checked_config(const json& body) {
    const DesignConfig config = design_from_json(body);
    const FeasibilityReport r = check_config(config);
    if (!r.ok) throw Infeasible{r};
    return config;
}

template <class F>
ApiResponse guarded(F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        return error_response(e.code(), e.what());
    } catch (const Infeasible& e) {
        return error_response(ErrorCode::InfeasibleConfig, "infeasible design: " + e.report.violation,
                              {{"link", e.report.link}, {"violation", e.report.violation}});
    } catch (const json::exception& e) {
        return error_response(ErrorCode::InvalidArgument, std::string("bad request JSON: ") + e.what());
    }
}

}  // namespace

JsonFileStore::JsonFileStore(std::string dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) fs::create_directories(dir_);
}

void JsonFileStore::put(const std::string& key, const json& value) {
    std::lock_guard lock(mutex_);
    if (dir_.empty()) {
        memory_[key] = value;
        return;
    }
    const fs::path final_path = fs::path(dir_) / (key + ".json");
    const fs::path tmp = fs::path(dir_) / (key + ".json.tmp");
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << value.dump(2) << '\n';
        if (!out) fail(ErrorCode::InvalidArgument, "cannot write " + tmp.string());
    }
    fs::rename(tmp, final_path);
}

std::optional<json> JsonFileStore::get(const std::string& key) const {
    std::lock_guard lock(mutex_);
    if (dir_.empty()) {
        const auto it = memory_.find(key);
        if (it == memory_.end()) return std::nullopt;
        return it->second;
    }
    std::ifstream in(fs::path(dir_) / (key + ".json"));
    if (!in) return std::nullopt;
    return json::parse(in);
}

std::vector<std::string> JsonFileStore::keys() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    if (dir_.empty()) {
        for (const auto& [k, v] : memory_) out.push_back(k);
        return out;
    }
    for (const auto& entry : fs::directory_iterator(dir_)) {
        if (entry.path().extension() == ".json") out.push_back(entry.path().stem().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

DesignState replay_session(const json& record) {
    DesignState state = init_design(design_from_json(record.at("config"))).state;
    for (const json& s : record.at("submissions")) {
        advance(state, number_array(s, "treated"), number_array(s, "control"));
    }
    return state;
}

struct Service::Session {
    std::mutex mutex;
    json record;
    DesignState state;
};

Service::Service(ServiceOptions options) : options_(std::move(options)), store_(options_.data_dir) {
    const unsigned n = std::max(1u, options_.job_workers);
    for (unsigned i = 0; i < n; ++i) workers_.emplace_back([this] { job_loop(); });
}

Service::~Service() {
    {
        std::lock_guard lock(jobs_mutex_);
        stopping_ = true;
    }
    jobs_cv_.notify_all();
    for (std::thread& t : workers_) t.join();
}

std::shared_ptr<Service::Session> Service::find_session(const std::string& id) {
    std::lock_guard lock(sessions_mutex_);
    const auto it = sessions_.find(id);
    if (it != sessions_.end()) return it->second;
    std::optional<json> record = id.find_first_of("/\\.") == std::string::npos ? store_.get(id) : std::nullopt;
    if (!record) fail(ErrorCode::NotFound, "no session '" + id + "'");
    auto session = std::make_shared<Session>();
    session->state = replay_session(*record);
    session->record = std::move(*record);
    sessions_[id] = session;
    return session;
}

void Service::persist(const Session& session) {
    store_.put(session.record.at("id").get<std::string>(), session.record);
}

ApiResponse Service::create_session(const json& body) {
    return guarded([&]() -> ApiResponse {
        const DesignConfig config = checked_config(body);
        Started started = init_design(config);
        auto session = std::make_shared<Session>();
        std::string id;
        {
            std::lock_guard lock(sessions_mutex_);
            do {
                id = random_id("s");
            } while (sessions_.count(id) != 0 || store_.get(id));
            sessions_[id] = session;
        }
        std::lock_guard lock(session->mutex);
        const std::string at = now_iso();
        session->state = std::move(started.state);
        session->record = {{"id", id},
                           {"config", to_json(config)},
                           {"request", body},
                           {"created", at},
                           {"updated", at},
                           {"submissions", json::array()},
                           {"audit", json::array({{{"event", "create"},
                                                   {"stage", started.first.stage_index},
                                                   {"t1", started.first.t1},
                                                   {"t0", started.first.t0},
                                                   {"at", at}}})}};
        persist(*session);
        return {201,
                {{"id", id},
                 {"config", session->record["config"]},
                 {"allocation", to_json(started.first)},
                 {"case_label", std::string(to_string(started.first.label))}}};
    });
}

ApiResponse Service::submit_stage(const std::string& id, const json& body) {
    return guarded([&]() -> ApiResponse {
        if (!body.is_object()) fail(ErrorCode::InvalidArgument, "observations must be a JSON object");
        const std::shared_ptr<Session> session = find_session(id);
        const std::vector<double> treated = number_array(body, "treated");
        const std::vector<double> control = number_array(body, "control");
        const std::string digest = payload_digest(treated, control);
        const std::optional<int> claimed =
            body.contains("stage") ? std::optional<int>(body.at("stage").get<int>()) : std::nullopt;

        std::lock_guard lock(session->mutex);
        DesignState& state = session->state;
        json& subs = session->record["submissions"];

        // A repeat of an accepted payload gets the original response back.
        const auto repeat = [&]() -> std::optional<ApiResponse> {
            for (auto it = subs.rbegin(); it != subs.rend(); ++it) {
                const int s = (*it).at("stage").get<int>();
                if (claimed && *claimed != s) continue;
                if ((*it).at("digest") != digest) {
                    if (claimed) break;
                    return std::nullopt;
                }
                session->record["audit"].push_back(
                    {{"event", "duplicate"}, {"stage", s}, {"digest", digest}, {"at", now_iso()}});
                persist(*session);
                return ApiResponse{200, (*it).at("response")};
            }
            return std::nullopt;
        };

        const bool counts_fit = !state.complete() &&
                                static_cast<std::int64_t>(treated.size()) == state.pending().t1 &&
                                static_cast<std::int64_t>(control.size()) == state.pending().t0;
        const bool stale = claimed && (state.complete() || *claimed < state.stage);
        if (stale || (!claimed && !counts_fit && !subs.empty())) {
            if (auto r = repeat()) return *r;
        }
        if (state.complete()) fail(ErrorCode::WrongStage, "experiment is already complete");
        if (claimed && *claimed != state.stage) {
            fail(ErrorCode::WrongStage, "stage " + std::to_string(*claimed) + " submitted but stage " +
                                            std::to_string(state.stage) + " is pending");
        }

        // Advance a copy so a rejected submission leaves the session untouched.
        DesignState next_state = state;
        const StageAllocation submitted = next_state.pending();
        const bool was_frozen = next_state.frozen_arm.has_value();
        const std::optional<StageAllocation> next = advance(next_state, treated, control);

        json path = json::array();
        for (CaseLabel l : next_state.case_path) path.push_back(std::string(to_string(l)));
        json response = {{"id", id},
                         {"submitted_stage", submitted.stage_index},
                         {"complete", next_state.complete()},
                         {"next", next ? to_json(*next) : json(nullptr)},
                         {"case_label", next ? json(std::string(to_string(next->label))) : json(nullptr)},
                         {"estimates", next_state.last_estimates ? to_json(*next_state.last_estimates) : json(nullptr)},
                         {"frozen_arm", nullptr},
                         {"froze", !was_frozen && next_state.frozen_arm.has_value()},
                         {"case_path", path}};
        if (next_state.frozen_arm) {
            response["frozen_arm"] = *next_state.frozen_arm == Arm::Treated ? "treated" : "control";
        }
        if (next_state.complete()) {
            const Finalized f = finalize(next_state);
            response["totals"] = {{"t1", f.totals.t1}, {"t0", f.totals.t0}};
            response["tau_hat"] = f.tau_hat;
        }

        state = std::move(next_state);
        const std::string at = now_iso();
        subs.push_back({{"stage", submitted.stage_index},
                        {"treated", treated},
                        {"control", control},
                        {"digest", digest},
                        {"response", response}});
        session->record["audit"].push_back({{"event", "submit"},
                                            {"stage", submitted.stage_index},
                                            {"t1", submitted.t1},
                                            {"t0", submitted.t0},
                                            {"digest", digest},
                                            {"at", at}});
        session->record["updated"] = at;
        persist(*session);
        return {200, response};
    });
}

ApiResponse Service::get_session(const std::string& id) {
    return guarded([&]() -> ApiResponse {
        const std::shared_ptr<Session> session = find_session(id);
        std::lock_guard lock(session->mutex);
        json snapshot = to_json(session->state);
        snapshot["id"] = id;
        snapshot["created"] = session->record["created"];
        snapshot["updated"] = session->record["updated"];
        snapshot["audit"] = session->record["audit"];
        if (session->state.complete()) {
            const Finalized f = finalize(session->state);
            snapshot["totals"] = {{"t1", f.totals.t1}, {"t0", f.totals.t0}};
            snapshot["tau_hat"] = f.tau_hat;
        }
        return {200, snapshot};
    });
}

ApiResponse Service::run_simulation(const json& body) {
    return guarded([&]() -> ApiResponse {
        if (!body.is_object()) fail(ErrorCode::InvalidArgument, "simulation request must be a JSON object");
        std::vector<DesignConfig> designs;
        const bool compare = body.contains("designs");
        if (compare) {
            if (!body.at("designs").is_array() || body.at("designs").empty()) {
                fail(ErrorCode::InvalidArgument, "'designs' must be a non-empty array");
            }
            for (const json& d : body.at("designs")) designs.push_back(checked_config(d));
        } else {
            if (!body.contains("design")) fail(ErrorCode::InvalidArgument, "missing 'design'");
            designs.push_back(checked_config(body.at("design")));
        }
        if (!body.contains("population")) fail(ErrorCode::InvalidArgument, "missing 'population'");
        const Population pop = population_from_json(body.at("population"));
        const std::int64_t n = body.value("n", std::int64_t{1000});
        if (n < 1) fail(ErrorCode::OutOfRange, "n must be >= 1");
        const std::uint64_t seed = body.value("seed", std::uint64_t{0});
        const bool samples = body.value("include_samples", false);
        BatchOptions opts;
        opts.workers = body.value("workers", 0u);
        if (body.contains("bound")) opts.bound = body.at("bound").get<double>();

        auto task = [designs, pop, n, seed, samples, opts, compare]() {
            std::vector<BatchSummary> out = compare_designs(designs, pop, seed, n, opts);
            if (!compare) return to_json(out.front(), samples);
            json all = json::array();
            for (const BatchSummary& s : out) all.push_back(to_json(s, samples));
            return json{{"schema", kBatchSchema}, {"summaries", all}};
        };
        if (n <= options_.sync_limit) return {200, task()};

        std::string job;
        {
            std::lock_guard lock(jobs_mutex_);
            job = "j" + std::to_string(next_job_++);
            jobs_[job] = Job{};
            queue_.emplace_back(job, task);
        }
        jobs_cv_.notify_one();
        return {202, {{"job", job}, {"status", "queued"}, {"href", "/v1/simulations/" + job}}};
    });
}

ApiResponse Service::get_job(const std::string& id) {
    std::lock_guard lock(jobs_mutex_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) return error_response(ErrorCode::NotFound, "no job '" + id + "'");
    json body = {{"job", id}, {"status", it->second.status}};
    if (it->second.status == "done") body["result"] = it->second.result;
    if (it->second.status == "failed") body["error"] = it->second.result;
    return {200, body};
}

void Service::job_loop() {
    for (;;) {
        std::pair<std::string, std::function<json()>> item;
        {
            std::unique_lock lock(jobs_mutex_);
            jobs_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
            if (stopping_) return;
            item = std::move(queue_.front());
            queue_.pop_front();
            jobs_[item.first].status = "running";
            ++busy_;
        }
        json result;
        std::string status = "done";
        try {
            result = item.second();
        } catch (const Error& e) {
            status = "failed";
            result = error_response(e.code(), e.what()).body;
        }
        {
            std::lock_guard lock(jobs_mutex_);
            jobs_[item.first].status = status;
            jobs_[item.first].result = std::move(result);
            --busy_;
        }
        jobs_idle_cv_.notify_all();
    }
}

void Service::wait_for_jobs() {
    std::unique_lock lock(jobs_mutex_);
    jobs_idle_cv_.wait(lock, [this] { return queue_.empty() && busy_ == 0; });
}

ApiResponse Service::handle(std::string_view method, std::string_view path, std::string_view body) {
    static const std::regex stages(R"(^/v1/sessions/([^/]+)/stages$)");
    static const std::regex session(R"(^/v1/sessions/([^/]+)$)");
    static const std::regex job(R"(^/v1/simulations/([^/]+)$)");
    const std::string p(path);
    std::smatch m;

    json parsed;
    if (method == "POST") {
        try {
            parsed = json::parse(body.empty() ? std::string_view("{}") : body);
        } catch (const json::exception& e) {
            return error_response(ErrorCode::ParseError, std::string("request body is not JSON: ") + e.what());
        }
    }
    if (method == "POST" && p == "/v1/sessions") return create_session(parsed);
    if (method == "POST" && std::regex_match(p, m, stages)) return submit_stage(m[1], parsed);
    if (method == "GET" && std::regex_match(p, m, session)) return get_session(m[1]);
    if (method == "POST" && p == "/v1/simulations") return run_simulation(parsed);
    if (method == "GET" && std::regex_match(p, m, job)) return get_job(m[1]);
    return error_response(ErrorCode::NotFound, std::string(method) + " " + p + " is not a route");
}

struct HttpServer::Impl {
    Service& service;
    httplib::Server server;
    explicit Impl(Service& s) : service(s) {}
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
    const auto route = [this](const httplib::Request& req, httplib::Response& res) {
        const ApiResponse r = impl_->service.handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_content(r.body.dump(), "application/json");
    };
    impl_->server.Get(".*", route);
    impl_->server.Post(".*", route);
    impl_->server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

}  // namespace neyman
