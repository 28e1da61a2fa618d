/** Browser bootstrap: wire the viewer app to the real DOM WebSocket. */

import { ViewerApp } from "./viewer.js";
import { WebSocketLike } from "./session.js";

declare global {
  interface Window {
    ekgViewer?: ViewerApp;
  }
}

function boot(): void {
  window.ekgViewer = new ViewerApp(
    document,
    (url) => new WebSocket(url) as unknown as WebSocketLike,
  );
}

if (document.readyState === "loading") {
  document.addEventListener("DOMContentLoaded", boot);
} else {
  boot();
}
