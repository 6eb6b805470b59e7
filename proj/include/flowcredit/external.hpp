#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "flowcredit/error.hpp"
#include "flowcredit/value.hpp"

namespace flowcredit {

struct ExternalSpec {
    std::string command;     // run through /bin/sh -c
    int timeout_ms = 10000;  // per round trip
};

// One model process, one in-flight request at a time. Workers that need
// parallel evaluation each spawn their own instance (see ExternalRuntime).
//
// Wire protocol, newline-delimited UTF-8 JSON over stdin/stdout:
//   -> {"id": <int>, "inputs": {"<node>": <number|string>, ...}}
//   <- {"id": <int>, "output": <number>}
class ExternalModel {
public:
    explicit ExternalModel(ExternalSpec spec) : spec_(std::move(spec)) {
        // a dying model must not take us down with SIGPIPE
        ::signal(SIGPIPE, SIG_IGN);
        int to_child[2];
        int from_child[2];
        if (::pipe(to_child) != 0 || ::pipe(from_child) != 0)
            fail(Errc::ProcessDead, "pipe() failed for '" + spec_.command + "'");
        pid_ = ::fork();
        if (pid_ < 0) fail(Errc::ProcessDead, "fork() failed");
        if (pid_ == 0) {
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            ::close(to_child[0]);
            ::close(to_child[1]);
            ::close(from_child[0]);
            ::close(from_child[1]);
            ::execl("/bin/sh", "sh", "-c", spec_.command.c_str(), (char*)nullptr);
            _exit(127);
        }
        ::close(to_child[0]);
        ::close(from_child[1]);
        in_fd_ = to_child[1];
        out_fd_ = from_child[0];
    }

    ExternalModel(const ExternalModel&) = delete;
    ExternalModel& operator=(const ExternalModel&) = delete;

    ~ExternalModel() {
        if (in_fd_ >= 0) ::close(in_fd_);
        if (out_fd_ >= 0) ::close(out_fd_);
        if (pid_ > 0) {
            ::kill(pid_, SIGTERM);
            int status = 0;
            for (int i = 0; i < 50 && ::waitpid(pid_, &status, WNOHANG) == 0; ++i)
                ::usleep(2000);
            if (::waitpid(pid_, &status, WNOHANG) == 0) {
                ::kill(pid_, SIGKILL);
                ::waitpid(pid_, &status, 0);
            }
        }
    }

    bool alive() const {
        if (pid_ <= 0) return false;
        return ::waitpid(pid_, nullptr, WNOHANG) == 0;
    }

    // Inputs are (node id, value) pairs; order only affects request bytes.
    Value call(const std::vector<std::pair<std::string, Value>>& inputs) {
        const std::int64_t id = next_id_++;
        nlohmann::ordered_json req;
        req["id"] = id;
        auto& in = req["inputs"] = nlohmann::ordered_json::object();
        for (const auto& [name, value] : inputs) {
            if (value.is_category())
                in[name] = value.label();
            else
                in[name] = value.real();
        }
        std::string line = req.dump();
        line.push_back('\n');
        write_all(line);

        const std::string reply = read_line();
        nlohmann::json resp;
        try {
            resp = nlohmann::json::parse(reply);
        } catch (const nlohmann::json::exception&) {
            fail(Errc::ProtocolViolation, "response is not valid JSON: " + reply);
        }
        if (!resp.is_object() || !resp.contains("id") || !resp["id"].is_number_integer() ||
            resp["id"].get<std::int64_t>() != id)
            fail(Errc::ProtocolViolation, "response id does not echo the request");
        if (!resp.contains("output") || !resp["output"].is_number())
            fail(Errc::ProtocolViolation, "response is missing a numeric 'output' field");
        return Value(resp["output"].get<double>());
    }

private:
    void write_all(const std::string& data) {
        std::size_t done = 0;
        while (done < data.size()) {
            const ssize_t n = ::write(in_fd_, data.data() + done, data.size() - done);
            if (n < 0) {
                if (errno == EINTR) continue;
                fail(Errc::ProcessDead, "model process closed its input ('" + spec_.command + "')");
            }
            done += static_cast<std::size_t>(n);
        }
    }

    std::string read_line() {
        const auto deadline =
            std::chrono::steady_clock::now() + std::chrono::milliseconds(spec_.timeout_ms);
        for (;;) {
            const auto nl = buffer_.find('\n');
            if (nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                return line;
            }
            const auto now = std::chrono::steady_clock::now();
            if (now >= deadline)
                fail(Errc::Timeout, "no response within " + std::to_string(spec_.timeout_ms) + " ms");
            const auto left =
                std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
            pollfd pfd{out_fd_, POLLIN, 0};
            const int pr = ::poll(&pfd, 1, static_cast<int>(left));
            if (pr == 0)
                fail(Errc::Timeout, "no response within " + std::to_string(spec_.timeout_ms) + " ms");
            if (pr < 0) {
                if (errno == EINTR) continue;
                fail(Errc::ProcessDead, "poll() failed");
            }
            char chunk[4096];
            const ssize_t n = ::read(out_fd_, chunk, sizeof(chunk));
            if (n == 0) fail(Errc::ProcessDead, "model process exited mid-call");
            if (n < 0) {
                if (errno == EINTR) continue;
                fail(Errc::ProcessDead, "read() from model process failed");
            }
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

    ExternalSpec spec_;
    pid_t pid_ = -1;
    int in_fd_ = -1;
    int out_fd_ = -1;
    std::string buffer_;
    std::int64_t next_id_ = 1;
};

inline Value call_external(ExternalModel& model, const std::map<std::string, Value>& inputs) {
    std::vector<std::pair<std::string, Value>> ordered(inputs.begin(), inputs.end());
    return model.call(ordered);
}

// Lazily spawned per-worker process pool, keyed by node id. Each evaluation
// state owns one, so no process ever sees concurrent requests.
class ExternalRuntime {
public:
    Value call(const std::string& node_id, const ExternalSpec& spec,
               const std::vector<std::pair<std::string, Value>>& inputs) {
        auto it = models_.find(node_id);
        if (it == models_.end())
            it = models_.emplace(node_id, std::make_unique<ExternalModel>(spec)).first;
        return it->second->call(inputs);
    }

private:
    std::map<std::string, std::unique_ptr<ExternalModel>> models_;
};

}  // namespace flowcredit
