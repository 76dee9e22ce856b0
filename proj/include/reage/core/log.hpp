#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace reage {

enum class LogLevel { Debug, Info, Warning, Error };

inline const char* to_string(LogLevel level)
{
    switch (level) {
    case LogLevel::Debug: return "debug";
    case LogLevel::Info: return "info";
    case LogLevel::Warning: return "warning";
    case LogLevel::Error: return "error";
    }
    return "?";
}

/// Collects run-log messages. Thread-safe; an optional sink mirrors every
/// message (the CLI points it at stderr).
class RunLog {
public:
    struct Entry {
        LogLevel level;
        std::string message;
    };

    using Sink = std::function<void(LogLevel, const std::string&)>;

    RunLog() = default;
    explicit RunLog(Sink sink) : sink_(std::move(sink)) {}

    void write(LogLevel level, std::string message)
    {
        std::lock_guard lock(mutex_);
        if (sink_) sink_(level, message);
        entries_.push_back({level, std::move(message)});
    }

    void info(std::string message) { write(LogLevel::Info, std::move(message)); }
    void warn(std::string message) { write(LogLevel::Warning, std::move(message)); }

    std::vector<Entry> entries() const
    {
        std::lock_guard lock(mutex_);
        return entries_;
    }

    std::size_t count(LogLevel level) const
    {
        std::lock_guard lock(mutex_);
        std::size_t n = 0;
        for (const auto& e : entries_) n += e.level == level;
        return n;
    }

    static Sink stderr_sink(LogLevel min_level = LogLevel::Info)
    {
        return [min_level](LogLevel level, const std::string& msg) {
            if (level >= min_level) std::cerr << "[" << to_string(level) << "] " << msg << '\n';
        };
    }

private:
    mutable std::mutex mutex_;
    Sink sink_;
    std::vector<Entry> entries_;
};

} // namespace reage
