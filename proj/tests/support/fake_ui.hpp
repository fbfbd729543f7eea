#pragma once

#include <atomic>
#include <thread>

#include <httplib.h>

#include "procnav/executor.hpp"

namespace fixture {

// Polls the driver channel like a panel UI in driver mode and performs each
// command on an in-process navigation state machine.
class FakeUi {
  public:
    FakeUi(const procnav::IeGraph& graph, int port, std::uint64_t ack_id_offset = 0)
        : panel_(graph), offset_(ack_id_offset), client_("127.0.0.1", port) {
        client_.set_read_timeout(5);
        thread_ = std::thread([this] { loop(); });
    }
    ~FakeUi() {
        stop_ = true;
        thread_.join();
    }
    std::size_t handled() const { return handled_; }
    const procnav::NavState& state() const { return panel_.state(); }

  private:
    void loop() {
        while (!stop_) {
            auto res = client_.Get("/driver/next?wait_ms=100");
            if (!res || res->status != 200) continue;
            auto cmd = procnav::driver_command_from_json(procnav::Json::parse(res->body));
            auto ack = panel_.send(cmd);
            ack.id += offset_;
            ++handled_;
            client_.Post("/driver/ack", procnav::to_json(ack).dump(), "application/json");
        }
    }

    procnav::GraphDriver panel_;
    std::uint64_t offset_;
    httplib::Client client_;
    std::atomic<bool> stop_{false};
    std::atomic<std::size_t> handled_{0};
    std::thread thread_;
};

}  // namespace fixture
