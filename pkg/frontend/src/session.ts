/** Signed-in identity. Held in memory only — a page reload signs you out. */
export interface UiSession {
  token: string;
  userId: string;
  provider: string;
}

let current: UiSession | null = null;
const listeners: Array<() => void> = [];

export function getSession(): UiSession | null {
  return current;
}

export function setSession(session: UiSession): void {
  current = session;
  listeners.forEach((fn) => fn());
}

export function clearSession(): void {
  current = null;
  listeners.forEach((fn) => fn());
}

/** Register a callback for login/logout (nav re-render etc.). */
export function onSessionChange(fn: () => void): void {
  listeners.push(fn);
}
