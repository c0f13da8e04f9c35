#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"

#include "scalesearch/executor.hpp"

namespace scalesearch {

namespace {

using clock_type = std::chrono::steady_clock;

void ignore_sigpipe_once() {
    // A child that exits before reading its stdin must not kill this process.
    static std::once_flag flag;
    std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

struct Pipe {
    int fds[2] = {-1, -1};
    Pipe() {
        if (::pipe(fds) != 0) throw ExecutionError("pipe() failed");
    }
    ~Pipe() {
        close_read();
        close_write();
    }
    int read_end() const { return fds[0]; }
    int write_end() const { return fds[1]; }
    void close_read() {
        if (fds[0] >= 0) ::close(fds[0]);
        fds[0] = -1;
    }
    void close_write() {
        if (fds[1] >= 0) ::close(fds[1]);
        fds[1] = -1;
    }
};

std::string build_request(const VisualOp& op, const std::vector<ToyImage>& images) {
    nlohmann::ordered_json req;
    req["source_code"] = op.source_code;
    req["images"] = nlohmann::json::array();
    for (const ToyImage& img : images) {
        req["images"].push_back({{"rows", img.rows}, {"cols", img.cols}, {"cells", img.cells}});
    }
    return req.dump();
}

std::vector<ToyImage> parse_response(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ExecutionError(std::string("external command produced malformed output: ") +
                             e.what());
    }
    if (!j.is_object() || !j.contains("images") || !j["images"].is_array())
        throw ExecutionError("external command output lacks an \"images\" array");
    std::vector<ToyImage> out;
    for (const auto& item : j["images"]) out.push_back(toy_image_from_json(item.dump()));
    return out;
}

[[noreturn]] void exec_child(const std::vector<std::string>& command, int in_fd, int out_fd,
                             int err_fd) {
    ::dup2(in_fd, STDIN_FILENO);
    ::dup2(out_fd, STDOUT_FILENO);
    ::dup2(err_fd, STDERR_FILENO);
    std::vector<char*> argv;
    argv.reserve(command.size() + 1);
    for (const std::string& arg : command) argv.push_back(const_cast<char*>(arg.c_str()));
    argv.push_back(nullptr);
    ::execvp(argv[0], argv.data());
    const char msg[] = "exec failed\n";
    (void)!::write(STDERR_FILENO, msg, sizeof msg - 1);
    ::_exit(127);
}

}  // namespace

std::vector<ToyImage> run_external(const VisualOp& op, const std::vector<ToyImage>& images,
                                   const ExecutorConfig& config) {
    if (config.command.empty()) throw ExecutionError("external adapter is not configured");
    ignore_sigpipe_once();

    const std::string request = build_request(op, images);
    Pipe to_child, from_child, err_child;

    pid_t pid = ::fork();
    if (pid < 0) throw ExecutionError("fork() failed");
    if (pid == 0) {
        // Drop the parent-side ends or the child keeps a writer on its own
        // stdin pipe and never sees EOF.
        to_child.close_write();
        from_child.close_read();
        err_child.close_read();
        exec_child(config.command, to_child.read_end(), from_child.write_end(),
                   err_child.write_end());
    }

    to_child.close_read();
    from_child.close_write();
    err_child.close_write();

    const auto deadline = clock_type::now() + std::chrono::milliseconds(config.timeout_ms);
    auto remaining_ms = [&]() {
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline -
                                                                          clock_type::now());
        return static_cast<int>(std::max<long long>(0, left.count()));
    };
    auto kill_and_reap = [&]() {
        ::kill(pid, SIGKILL);
        int status = 0;
        ::waitpid(pid, &status, 0);
    };

    // The request is small; write it before draining output.
    std::size_t written = 0;
    while (written < request.size()) {
        ssize_t n = ::write(to_child.write_end(), request.data() + written,
                            request.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            break;  // child is gone or not reading; its exit status tells the story
        }
        written += static_cast<std::size_t>(n);
    }
    to_child.close_write();

    std::string out_text, err_text;
    bool timed_out = false;
    while (true) {
        struct pollfd fds[2];
        nfds_t nfds = 0;
        int out_slot = -1, err_slot = -1;
        if (from_child.read_end() >= 0) {
            out_slot = static_cast<int>(nfds);
            fds[nfds++] = {from_child.read_end(), POLLIN, 0};
        }
        if (err_child.read_end() >= 0) {
            err_slot = static_cast<int>(nfds);
            fds[nfds++] = {err_child.read_end(), POLLIN, 0};
        }
        if (nfds == 0) break;

        int rc = ::poll(fds, nfds, remaining_ms());
        if (rc < 0) {
            if (errno == EINTR) continue;
            kill_and_reap();
            throw ExecutionError("poll() failed while reading external command output");
        }
        if (rc == 0) {
            timed_out = true;
            break;
        }
        char buf[4096];
        auto drain = [&](int slot, Pipe& pipe, std::string& sink) {
            if (slot < 0 || fds[slot].revents == 0) return;
            ssize_t n = ::read(pipe.read_end(), buf, sizeof buf);
            if (n > 0)
                sink.append(buf, static_cast<std::size_t>(n));
            else
                pipe.close_read();
        };
        drain(out_slot, from_child, out_text);
        drain(err_slot, err_child, err_text);
    }

    if (timed_out) {
        kill_and_reap();
        throw ExecutionError("external command timeout after " +
                             std::to_string(config.timeout_ms) + " ms");
    }

    // Output streams hit EOF; wait for exit, still under the deadline.
    int status = 0;
    while (true) {
        pid_t done = ::waitpid(pid, &status, WNOHANG);
        if (done == pid) break;
        if (done < 0 && errno != EINTR) {
            kill_and_reap();
            throw ExecutionError("waitpid() failed for external command");
        }
        if (clock_type::now() >= deadline) {
            kill_and_reap();
            throw ExecutionError("external command timeout after " +
                                 std::to_string(config.timeout_ms) + " ms");
        }
        ::usleep(1000);
    }

    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        std::string detail = err_text.empty() ? "(no stderr)" : err_text;
        int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        throw ExecutionError("external command exited with status " + std::to_string(code) +
                             ": " + detail);
    }
    return parse_response(out_text);
}

}  // namespace scalesearch
