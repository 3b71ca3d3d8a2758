export type ToastType = "info" | "success" | "error";

const DEFAULT_DURATION = 4000;

/**
 * Append a toast to the #toasts host. The message is rendered verbatim
 * (textContent, not innerHTML) — gateway error strings must survive
 * untouched.
 */
export function showToast(
  message: string,
  type: ToastType = "info",
  duration = DEFAULT_DURATION,
): void {
  const host = document.getElementById("toasts");
  if (!host) {
    return;
  }
  const el = document.createElement("div");
  el.className = `toast toast-${type}`;
  el.textContent = message;
  host.appendChild(el);
  setTimeout(() => el.remove(), duration);
}
