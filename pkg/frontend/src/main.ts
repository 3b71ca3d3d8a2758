import { navigate, route, startRouter, type View } from "./router.js";
import { getSession, onSessionChange } from "./session.js";
import { historyView } from "./views/history.js";
import { loginView } from "./views/login.js";
import { rateView } from "./views/rate.js";

export const BLOCKED_NOTICE =
  "You can not rate a resource until you have signed in.";

function guarded(view: View): View {
  return (root) => {
    if (!getSession()) {
      loginView(root, BLOCKED_NOTICE);
      return;
    }
    return view(root);
  };
}

export function mountApp(): void {
  route("#/login", (root) => loginView(root));
  route("#/rate", guarded(rateView));
  route("#/history", guarded(historyView));
  onSessionChange(() => {
    if (!getSession()) {
      navigate("#/login");
    }
  });
  startRouter();
}

if (document.getElementById("app")) {
  mountApp();
}
