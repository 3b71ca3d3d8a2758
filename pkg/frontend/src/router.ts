export type View = (root: HTMLElement) => void | Promise<void>;

const routes = new Map<string, View>();
let rendering: Promise<void> = Promise.resolve();
let renderedHash = "";

export function route(hash: string, view: View): void {
  routes.set(hash, view);
}

function render(): void {
  const root = document.getElementById("app");
  if (!root) {
    return;
  }
  const hash = window.location.hash || "#/login";
  renderedHash = hash;
  const view = routes.get(hash) ?? routes.get("#/login");
  if (view) {
    rendering = Promise.resolve(view(root));
  }
}

// back/forward and hand-edited URLs; must not re-render a route that
// navigate() already drew, or an in-flight view would lose its DOM
function renderIfStale(): void {
  if ((window.location.hash || "#/login") !== renderedHash) {
    render();
  }
}

/**
 * Go to a route and wait for its view to finish rendering (async views
 * fetch before they touch the DOM).
 */
export async function navigate(hash: string): Promise<void> {
  if (window.location.hash !== hash) {
    history.pushState(null, "", hash);
  }
  render();
  await rendering;
}

export function startRouter(): void {
  window.addEventListener("hashchange", renderIfStale);
  window.addEventListener("popstate", renderIfStale);
  render();
}
