#pragma once

#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <deque>
#include <thread>
#include <vector>

namespace ccotdr {

// Bounded multi-producer/multi-consumer hand-off queue. push() blocks while
// full; pop() returns nullopt once the queue is closed and drained.
template <typename T>
class BoundedQueue {
public:
    explicit BoundedQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

    bool push(T value) {
        std::unique_lock lock(mutex_);
        not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
        if (closed_) return false;
        items_.push_back(std::move(value));
        not_empty_.notify_one();
        return true;
    }

    std::optional<T> pop() {
        std::unique_lock lock(mutex_);
        not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
        if (items_.empty()) return std::nullopt;
        T value = std::move(items_.front());
        items_.pop_front();
        not_full_.notify_one();
        return value;
    }

    void close() {
        std::lock_guard lock(mutex_);
        closed_ = true;
        not_empty_.notify_all();
        not_full_.notify_all();
    }

private:
    std::size_t capacity_;
    std::deque<T> items_;
    bool closed_ = false;
    std::mutex mutex_;
    std::condition_variable not_empty_;
    std::condition_variable not_full_;
};

// Evaluates produce(i) for i in [0, count) on `workers` threads and hands the
// results to sink in index order. At most `depth` results are outstanding
// beyond the next one to be delivered. make_producer is called once per
// worker so each thread can own non-shareable state.
template <typename T>
void ordered_parallel(std::int64_t count, int workers, std::size_t depth,
                      const std::function<std::function<T(std::int64_t)>()>& make_producer,
                      const std::function<void(T&&)>& sink) {
    if (count <= 0) return;
    if (workers <= 1) {
        auto produce = make_producer();
        for (std::int64_t i = 0; i < count; ++i) sink(produce(i));
        return;
    }
    if (depth < static_cast<std::size_t>(workers)) depth = static_cast<std::size_t>(workers);

    std::mutex mutex;
    std::condition_variable cv;
    std::map<std::int64_t, T> ready;
    std::int64_t next_claim = 0;
    std::int64_t next_deliver = 0;
    bool failed = false;
    std::exception_ptr error;

    auto worker = [&] {
        try {
            auto produce = make_producer();
            for (;;) {
                std::int64_t i = 0;
                {
                    std::unique_lock lock(mutex);
                    cv.wait(lock, [&] {
                        return failed || next_claim >= count ||
                               next_claim < next_deliver + static_cast<std::int64_t>(depth);
                    });
                    if (failed || next_claim >= count) return;
                    i = next_claim++;
                }
                T value = produce(i);
                std::lock_guard lock(mutex);
                ready.emplace(i, std::move(value));
                cv.notify_all();
            }
        } catch (...) {
            std::lock_guard lock(mutex);
            if (!failed) error = std::current_exception();
            failed = true;
            cv.notify_all();
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) threads.emplace_back(worker);

    try {
        while (next_deliver < count) {
            T value;
            {
                std::unique_lock lock(mutex);
                cv.wait(lock, [&] { return failed || ready.count(next_deliver) != 0; });
                if (failed) break;
                auto node = ready.extract(next_deliver);
                value = std::move(node.mapped());
            }
            sink(std::move(value));
            std::lock_guard lock(mutex);
            ++next_deliver;
            cv.notify_all();
        }
    } catch (...) {
        std::lock_guard lock(mutex);
        if (!failed) error = std::current_exception();
        failed = true;
        cv.notify_all();
    }
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace ccotdr
