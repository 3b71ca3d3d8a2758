import { ApiError, login } from "../api.js";
import { navigate } from "../router.js";
import { setSession } from "../session.js";

const PROVIDERS = ["google", "github", "spotify"];

/** Sign-in page: pick the platform, paste the credential it issued. */
export function loginView(root: HTMLElement, notice?: string): void {
  root.innerHTML = `
    <section class="card">
      <h2>Sign in</h2>
      ${notice ? `<p id="login-notice" class="notice"></p>` : ""}
      <p>Select the platform to sign in with:</p>
      <input id="credential" type="password" placeholder="credential"
             autocomplete="off" />
      <div class="providers">
        ${PROVIDERS.map((p) => `
          <button type="button" class="provider" data-provider="${p}">
            Sign in with ${p}
          </button>`).join("")}
      </div>
      <div id="login-error"></div>
    </section>`;
  if (notice) {
    document.getElementById("login-notice")!.textContent = notice;
  }

  root.querySelectorAll<HTMLButtonElement>("button.provider").forEach((btn) => {
    btn.addEventListener("click", async () => {
      const credential =
        (document.getElementById("credential") as HTMLInputElement).value;
      try {
        const session = await login(btn.dataset.provider!, credential);
        setSession({
          token: session.session_token,
          userId: session.user_id,
          provider: session.provider,
        });
        await navigate("#/rate");
      } catch (err) {
        const banner = document.getElementById("login-error")!;
        banner.className = "banner error";
        banner.textContent =
          err instanceof ApiError ? err.message : "Sign-in failed.";
      }
    });
  });
}
