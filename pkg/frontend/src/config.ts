/**
 * Gateway base URL. Override at deploy time by setting
 * `window.RATECHAIN_API` in index.html before the app module loads.
 */
export function apiBase(): string {
  return (globalThis as { RATECHAIN_API?: string }).RATECHAIN_API
    ?? "http://127.0.0.1:8334";
}
