// SPDX-License-Identifier: MIT
#ifndef VERSIONTREE_HARNESS_FIBER_HPP
#define VERSIONTREE_HARNESS_FIBER_HPP

/// \file
/// Stackful context switch for the stepper's cooperative threads.
///
/// On x86-64 Linux a minimal assembly switch saves the callee-saved state
/// and swaps stacks directly. glibc's swapcontext additionally saves and
/// restores the signal mask, a system call per switch; the stepper parks
/// at every shared-memory access, so that syscall would dominate stepping
/// cost. Other targets use the portable <ucontext.h> path. Define
/// VERSIONTREE_FIBER_ASM=0 to force the fallback.

#include <cstddef>
#include <cstdint>

#ifndef VERSIONTREE_FIBER_ASM
#if defined(__x86_64__) && defined(__linux__) && defined(__GNUC__)
#define VERSIONTREE_FIBER_ASM 1
#else
#define VERSIONTREE_FIBER_ASM 0
#endif
#endif

#if VERSIONTREE_FIBER_ASM

// The symbols are weak so the header can be included from several
// translation units of one binary.
asm(R"(
.text
.align 16
.weak vt_fiber_swap
.type vt_fiber_swap,@function
vt_fiber_swap:
  pushq %rbp
  pushq %rbx
  pushq %r12
  pushq %r13
  pushq %r14
  pushq %r15
  subq $8, %rsp
  stmxcsr (%rsp)
  fnstcw 4(%rsp)
  movq %rsp, (%rdi)
  movq %rsi, %rsp
  ldmxcsr (%rsp)
  fldcw 4(%rsp)
  addq $8, %rsp
  popq %r15
  popq %r14
  popq %r13
  popq %r12
  popq %rbx
  popq %rbp
  retq
.size vt_fiber_swap,.-vt_fiber_swap

.align 16
.weak vt_fiber_boot
.type vt_fiber_boot,@function
vt_fiber_boot:
  andq $-16, %rsp
  callq *%r12
  ud2
.size vt_fiber_boot,.-vt_fiber_boot
)");

extern "C" void vt_fiber_swap(void** from_sp, void* to_sp) noexcept;
extern "C" void vt_fiber_boot() noexcept;

namespace versiontree::harness {

/// One execution context. Fiber contexts are prepared on an explicit
/// stack; the controller's context is only ever a switch target.
class FiberContext {
 public:
  /// Arranges the stack so the first switch into this context calls
  /// entry(). entry must not return: a fiber ends by switching away for
  /// the last time.
  void prepare(char* stack_base, std::size_t size, void (*entry)()) {
    auto top = reinterpret_cast<std::uintptr_t>(stack_base) + size;
    top &= ~std::uintptr_t{15};
    auto* p = reinterpret_cast<std::uintptr_t*>(top);
    *--p = 0;  // keeps the boot frame 16-byte aligned
    *--p = reinterpret_cast<std::uintptr_t>(&vt_fiber_boot);  // ret target
    *--p = 0;                                                 // rbp
    *--p = 0;                                                 // rbx
    *--p = reinterpret_cast<std::uintptr_t>(entry);           // r12
    *--p = 0;                                                 // r13
    *--p = 0;                                                 // r14
    *--p = 0;                                                 // r15
    std::uint32_t mxcsr;
    std::uint16_t fcw;
    asm volatile("stmxcsr %0\n\tfnstcw %1" : "=m"(mxcsr), "=m"(fcw));
    *--p = (std::uintptr_t{fcw} << 32) | mxcsr;  // the swap's fp control block
    sp_ = p;
  }

  static void switch_to(FiberContext& from, FiberContext& to) {
    vt_fiber_swap(&from.sp_, to.sp_);
  }

 private:
  void* sp_ = nullptr;
};

}  // namespace versiontree::harness

#else  // !VERSIONTREE_FIBER_ASM

#include <ucontext.h>

namespace versiontree::harness {

class FiberContext {
 public:
  void prepare(char* stack_base, std::size_t size, void (*entry)()) {
    getcontext(&ctx_);
    ctx_.uc_stack.ss_sp = stack_base;
    ctx_.uc_stack.ss_size = size;
    ctx_.uc_link = nullptr;
    makecontext(&ctx_, entry, 0);
  }

  static void switch_to(FiberContext& from, FiberContext& to) {
    swapcontext(&from.ctx_, &to.ctx_);
  }

 private:
  ucontext_t ctx_{};
};

}  // namespace versiontree::harness

#endif  // VERSIONTREE_FIBER_ASM

#endif  // VERSIONTREE_HARNESS_FIBER_HPP
