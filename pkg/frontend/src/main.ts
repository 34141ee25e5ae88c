import { ApiClient } from "./api.js";
import { App } from "./app.js";

declare global {
  interface Window {
    XNARR_SERVICE_URL?: string;
  }
}

function serviceUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("service");
  return (
    fromQuery ?? window.XNARR_SERVICE_URL ?? "http://127.0.0.1:8077"
  ).replace(/\/$/, "");
}

const root = document.getElementById("app");
if (root) {
  new App(root, new ApiClient(serviceUrl()));
}
