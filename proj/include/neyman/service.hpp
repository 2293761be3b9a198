#pragma once
// HTTP session service. Live experiments advance stage by stage through the
// designs module; batch simulations run through montecarlo. Routing is kept
// apart from the socket layer so the same handler serves HTTP and tests.
//
//   POST /v1/sessions                 design JSON -> id + stage-1 allocation
//   POST /v1/sessions/{id}/stages     {treated:[..], control:[..], stage?} -> next allocation
//   GET  /v1/sessions/{id}            state snapshot with case path and audit log
//   POST /v1/simulations              {design|designs, population, n, seed} -> summary or job
//   GET  /v1/simulations/{job}        job status and result

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "neyman/designs.hpp"
#include "neyman/error.hpp"

namespace neyman {

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

int http_status(ErrorCode code) noexcept;
ApiResponse error_response(ErrorCode code, const std::string& message, nlohmann::json detail = nullptr);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

// One JSON document per key under `dir`, replaced atomically on write.
// An empty dir keeps everything in memory.
class JsonFileStore {
public:
    explicit JsonFileStore(std::string dir);

    void put(const std::string& key, const nlohmann::json& value);
    std::optional<nlohmann::json> get(const std::string& key) const;
    std::vector<std::string> keys() const;

private:
    std::string dir_;
    mutable std::mutex mutex_;
    std::map<std::string, nlohmann::json> memory_;
};

// Rebuilds a session's design state from its stored record by re-running every
// accepted submission through the designs module.
DesignState replay_session(const nlohmann::json& record);

struct ServiceOptions {
    std::string data_dir;
    // Requests with more trajectories than this are queued as jobs.
    std::int64_t sync_limit = 10000;
    unsigned job_workers = 2;
};

class Service {
public:
    explicit Service(ServiceOptions options = {});
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    ApiResponse create_session(const nlohmann::json& body);
    ApiResponse submit_stage(const std::string& id, const nlohmann::json& body);
    ApiResponse get_session(const std::string& id);
    ApiResponse run_simulation(const nlohmann::json& body);
    ApiResponse get_job(const std::string& id);

    ApiResponse handle(std::string_view method, std::string_view path, std::string_view body);

    // Blocks until the job leaves the queue; for tests.
    void wait_for_jobs();

private:
    struct Session;
    struct Job {
        std::string status = "queued";
        nlohmann::json result;
    };

    std::shared_ptr<Session> find_session(const std::string& id);
    void persist(const Session& session);
    void job_loop();

    ServiceOptions options_;
    JsonFileStore store_;
    std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;

    std::mutex jobs_mutex_;
    std::condition_variable jobs_cv_;
    std::condition_variable jobs_idle_cv_;
    std::map<std::string, Job> jobs_;
    std::deque<std::pair<std::string, std::function<nlohmann::json()>>> queue_;
    unsigned busy_ = 0;
    std::uint64_t next_job_ = 1;
    bool stopping_ = false;
    std::vector<std::thread> workers_;
};

// cpp-httplib front end for a Service.
class HttpServer {
public:
    explicit HttpServer(Service& service);
    ~HttpServer();

    // Port 0 picks a free port. Returns the bound port, or -1.
    int bind(const std::string& host, int port);
    // Blocks until stop().
    bool listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace neyman
