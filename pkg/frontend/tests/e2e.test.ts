// Full UI flow against a real gateway process with stub auth. Requires
// the backend package to be installed (`ratechain` on PATH).
import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, expect, it } from "vitest";

import { idle } from "../src/api.js";
import { BLOCKED_NOTICE, mountApp } from "../src/main.js";
import { navigate } from "../src/router.js";
import { clearSession } from "../src/session.js";

const PORT = 8371;
const BASE = `http://127.0.0.1:${PORT}`;
const URL_UNDER_TEST = "https://example.com/demo-article";

let gateway: ChildProcess;

async function waitForGateway(): Promise<void> {
  const deadline = Date.now() + 30_000;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`${BASE}/chain`);
      if (res.ok) {
        return;
      }
    } catch {
      // not listening yet
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error("gateway did not come up in 30s");
}

beforeAll(async () => {
  (globalThis as { RATECHAIN_API?: string }).RATECHAIN_API = BASE;
  const dir = mkdtempSync(join(tmpdir(), "ratechain-ui-"));
  gateway = spawn("ratechain", [
    "node", "run",
    "--port", String(PORT),
    "--difficulty", "8",
    "--chain-file", join(dir, "chain.jsonl"),
  ], { stdio: "ignore" });
  await waitForGateway();
});

afterAll(() => {
  gateway?.kill();
});

function el(id: string): HTMLElement {
  const found = document.getElementById(id);
  if (!found) {
    throw new Error(`#${id} not in document`);
  }
  return found;
}

function rowFor(resource: string): Element {
  const row = document.querySelector(`tr[data-resource="${resource}"]`);
  if (!row) {
    throw new Error(`no table row for ${resource}`);
  }
  return row;
}

function counts(resource: string): [string, string] {
  const row = rowFor(resource);
  return [
    row.querySelector(".likes")!.textContent!,
    row.querySelector(".dislikes")!.textContent!,
  ];
}

it("login, rate, flip, duplicate — against a live node", async () => {
  document.body.innerHTML = `<main id="app"></main><div id="toasts"></div>`;
  clearSession();
  mountApp();

  // rating page is unreachable before authentication
  await navigate("#/rate");
  expect(document.getElementById("resource-url")).toBeNull();
  expect(el("login-notice").textContent).toBe(BLOCKED_NOTICE);

  // sign in with a stub github credential
  (el("credential") as HTMLInputElement).value = "alice-github-secret";
  (document.querySelector("button[data-provider=github]") as HTMLElement)
    .click();
  await idle();
  expect(el("whoami").textContent).toContain(
    "466c18d13a3fbfbe7c8a8a0083399a13");

  // like a registered URL: estimate modal first, then confirm
  (el("resource-url") as HTMLInputElement).value = URL_UNDER_TEST;
  el("like-btn").click();
  await idle();
  expect(el("estimate-gas").textContent).toBe("20000");
  el("confirm-rate").click();
  await idle();

  // confirmed rating lands and the history table shows (1, 0)
  expect(counts(URL_UNDER_TEST)).toEqual(["1", "0"]);
  expect(rowFor(URL_UNDER_TEST).querySelector(".my-vote")!.textContent)
    .toBe("like");

  // flip to dislike: the same row updates in place to (0, 1)
  await navigate("#/rate");
  (el("resource-url") as HTMLInputElement).value = URL_UNDER_TEST;
  el("dislike-btn").click();
  await idle();
  el("confirm-rate").click();
  await idle();
  expect(counts(URL_UNDER_TEST)).toEqual(["0", "1"]);
  expect(rowFor(URL_UNDER_TEST).querySelector(".my-vote")!.textContent)
    .toBe("dislike");

  // repeating the same vote is refused with the verbatim message
  await navigate("#/rate");
  (el("resource-url") as HTMLInputElement).value = URL_UNDER_TEST;
  el("dislike-btn").click();
  await idle();
  expect(document.getElementById("confirm-modal")).toBeNull();
  const toast = document.querySelector("#toasts .toast-error")!;
  expect(toast.textContent)
    .toBe("Multiple ratings for the same resource are not allowed.");

  // and an unregistered URL gets the other verbatim message
  (el("resource-url") as HTMLInputElement).value = "notaurl";
  el("like-btn").click();
  await idle();
  const toasts = document.querySelectorAll("#toasts .toast-error");
  expect(toasts[toasts.length - 1].textContent).toBe("Invalid resource.");
});
