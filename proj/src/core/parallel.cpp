#include "core/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace mvg4d {

namespace {

int clamp_thread_count(int count) {
    if (count <= 0) {
        unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1 : static_cast<int>(hw);
    }
    return count;
}

// Persistent pool; render loops dispatch thousands of small batches and
// per-call thread spawning would dominate.
class Pool {
public:
    explicit Pool(int workers)
        : workers_(workers) {
        for (int i = 0; i < workers; ++i) {
            threads_.emplace_back([this] { worker_loop(); });
        }
    }

    ~Pool() {
        {
            std::lock_guard lock(mutex_);
            stopping_ = true;
        }
        wake_.notify_all();
        for (auto& t : threads_) {
            t.join();
        }
    }

    int workers() const { return workers_; }

    void run(std::size_t count, const std::function<void(std::size_t)>& fn) {
        std::unique_lock lock(mutex_);
        job_fn_ = &fn;
        job_count_ = count;
        next_item_.store(0, std::memory_order_relaxed);
        pending_ = count;
        ++generation_;
        lock.unlock();
        wake_.notify_all();

        // The submitting thread participates too.
        drain();

        std::unique_lock wait_lock(mutex_);
        done_.wait(wait_lock, [this] { return pending_ == 0; });
        job_fn_ = nullptr;
    }

private:
    void drain() {
        for (;;) {
            std::size_t i = next_item_.fetch_add(1, std::memory_order_relaxed);
            if (i >= job_count_) {
                return;
            }
            (*job_fn_)(i);
            std::lock_guard lock(mutex_);
            if (--pending_ == 0) {
                done_.notify_all();
            }
        }
    }

    void worker_loop() {
        std::uint64_t seen = 0;
        for (;;) {
            {
                std::unique_lock lock(mutex_);
                wake_.wait(lock, [&] { return stopping_ || generation_ != seen; });
                if (stopping_) {
                    return;
                }
                seen = generation_;
            }
            drain();
        }
    }

    int workers_;
    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable done_;
    const std::function<void(std::size_t)>* job_fn_ = nullptr;
    std::size_t job_count_ = 0;
    std::atomic<std::size_t> next_item_{0};
    std::size_t pending_ = 0;
    std::uint64_t generation_ = 0;
    bool stopping_ = false;
};

std::mutex g_pool_mutex;
std::unique_ptr<Pool> g_pool;           // guarded by g_pool_mutex
int g_requested_threads = 0;

Pool* acquire_pool() {
    int want = clamp_thread_count(g_requested_threads);
    if (!g_pool || g_pool->workers() != want) {
        g_pool = std::make_unique<Pool>(want);
    }
    return g_pool.get();
}

} // namespace

void set_max_threads(int count) {
    std::lock_guard lock(g_pool_mutex);
    g_requested_threads = count;
}

int max_threads() {
    std::lock_guard lock(g_pool_mutex);
    return clamp_thread_count(g_requested_threads);
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    if (count == 0) {
        return;
    }
    std::unique_lock lock(g_pool_mutex);
    if (clamp_thread_count(g_requested_threads) == 1 || count == 1) {
        lock.unlock();
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    Pool* pool = acquire_pool();
    pool->run(count, fn);
}

} // namespace mvg4d
