#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace procnav {

struct ServiceConfig {
    std::filesystem::path layout;
    std::filesystem::path scenarios;  // directory of <id>.txt procedures
    std::filesystem::path store;
    std::optional<std::filesystem::path> hra_config;
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    bool chaining = false;
    int attach_window_ms = 5000;   // a UI counts as attached this long after its last poll
    int driver_timeout_ms = 30000; // per command, waiting for the ack
    int poll_wait_ms = 20000;      // longest /driver/next hold
};

// "host:port", ":port" or "port". Throws invalid_params.
void parse_listen(std::string_view text, ServiceConfig& config);

// Loads the layout, procedures and HRA config, plans every scenario and
// reopens the session store. Throws on any bad artifact.
class ApiService {
  public:
    explicit ApiService(ServiceConfig config);
    ~ApiService();
    ApiService(const ApiService&) = delete;
    ApiService& operator=(const ApiService&) = delete;

    // Binds the listening socket and returns the port. Throws io_error.
    int bind();
    // Serves until stop(); binds first if needed.
    void serve();
    // bind() plus serve() on a background thread.
    int start();
    void stop();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace procnav
