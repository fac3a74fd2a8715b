#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace adapt::station {

struct Event {
    std::uint64_t id = 0;
    std::string topic;
    nlohmann::json data;

    /// Server-sent-events wire form.
    [[nodiscard]] std::string sse() const {
        return "id: " + std::to_string(id) + "\nevent: " + topic + "\ndata: " + data.dump() + "\n\n";
    }
};

/// One reader's queue. A reader that falls more than `capacity` events
/// behind is closed rather than silently skipping updates.
class Subscription {
public:
    explicit Subscription(std::size_t capacity) : capacity_(capacity) {}

    std::optional<Event> next(std::chrono::milliseconds wait) {
        std::unique_lock lock(mu_);
        cv_.wait_for(lock, wait, [&] { return !queue_.empty() || closed_; });
        if (queue_.empty())
            return std::nullopt;
        Event e = std::move(queue_.front());
        queue_.pop_front();
        return e;
    }

    [[nodiscard]] bool closed() const {
        std::lock_guard lock(mu_);
        return closed_ && queue_.empty();
    }

    void close() {
        std::lock_guard lock(mu_);
        closed_ = true;
        cv_.notify_all();
    }

private:
    friend class EventBus;
    void deliver(const Event& e) {
        std::lock_guard lock(mu_);
        if (closed_)
            return;
        if (queue_.size() >= capacity_) {
            closed_ = true; // overflowed: the client reconnects and resnapshots
        } else {
            queue_.push_back(e);
        }
        cv_.notify_all();
    }

    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Event> queue_;
    std::size_t capacity_;
    bool closed_ = false;
};

/// Fan-out of station updates to any number of readers, in publish order.
class EventBus {
public:
    std::shared_ptr<Subscription> subscribe(std::size_t capacity = 100000) {
        auto s = std::make_shared<Subscription>(capacity);
        std::lock_guard lock(mu_);
        subs_.push_back(s);
        return s;
    }

    void publish(std::string topic, nlohmann::json data) {
        std::lock_guard lock(mu_);
        const Event e{++last_id_, std::move(topic), std::move(data)};
        std::erase_if(subs_, [](const std::weak_ptr<Subscription>& w) { return w.expired(); });
        for (auto& w : subs_)
            if (auto s = w.lock())
                s->deliver(e);
    }

    void close_all() {
        std::lock_guard lock(mu_);
        for (auto& w : subs_)
            if (auto s = w.lock())
                s->close();
    }

    [[nodiscard]] std::uint64_t last_id() const {
        std::lock_guard lock(mu_);
        return last_id_;
    }

private:
    mutable std::mutex mu_;
    std::vector<std::weak_ptr<Subscription>> subs_;
    std::uint64_t last_id_ = 0;
};

} // namespace adapt::station
