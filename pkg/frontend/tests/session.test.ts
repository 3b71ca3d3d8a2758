import { beforeEach, describe, expect, it } from "vitest";

import {
  clearSession,
  getSession,
  onSessionChange,
  setSession,
} from "../src/session.js";

describe("session", () => {
  beforeEach(() => {
    clearSession();
  });

  it("starts signed out", () => {
    expect(getSession()).toBeNull();
  });

  it("holds the session in memory and clears it", () => {
    setSession({ token: "t", userId: "u", provider: "github" });
    expect(getSession()).toEqual({ token: "t", userId: "u", provider: "github" });
    clearSession();
    expect(getSession()).toBeNull();
  });

  it("notifies listeners on login and logout", () => {
    const seen: Array<string | null> = [];
    onSessionChange(() => seen.push(getSession()?.userId ?? null));
    setSession({ token: "t", userId: "u1", provider: "google" });
    clearSession();
    expect(seen).toEqual(["u1", null]);
  });
});
