/**
 * Typed client for the annotation service JSON API.
 *
 * All requests go to `${baseUrl}/api/...`; baseUrl defaults to same-origin
 * so the bundle works when served by the service itself.
 */

export interface Progress {
  total: number;
  answered: number;
  skipped: number;
}

export interface Session {
  session_id: string;
  annotator_id: string;
  phase: string;
  item_ids: string[];
  progress: Progress;
}

export interface NextItem {
  done: boolean;
  item_id?: string;
  source?: string;
  tokens?: string[];
  progress: Progress;
}

export interface MarksResponse {
  stored: boolean;
  correction?: string;
  warning?: string;
}

export interface ApiError {
  code: string;
  message: string;
}

export class ServiceError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(status: number, body: ApiError) {
    super(body.message);
    this.code = body.code;
    this.status = status;
  }
}

async function request<T>(
  baseUrl: string,
  path: string,
  init?: RequestInit,
): Promise<T> {
  const response = await fetch(`${baseUrl}${path}`, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  if (!response.ok) {
    let body: ApiError;
    try {
      body = (await response.json()) as ApiError;
    } catch {
      body = { code: "HttpError", message: `status ${response.status}` };
    }
    throw new ServiceError(response.status, body);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  createSession(annotatorId: string, phase: string): Promise<Session> {
    return request<Session>(this.baseUrl, "/api/sessions", {
      method: "POST",
      body: JSON.stringify({ annotator_id: annotatorId, phase }),
    });
  }

  nextItem(sessionId: string): Promise<NextItem> {
    return request<NextItem>(this.baseUrl, `/api/sessions/${sessionId}/next`);
  }

  submitMarks(
    sessionId: string,
    itemId: string,
    marks: number[],
  ): Promise<MarksResponse> {
    return request<MarksResponse>(this.baseUrl, `/api/items/${itemId}/marks`, {
      method: "POST",
      body: JSON.stringify({ session_id: sessionId, marks }),
    });
  }

  skipItem(
    sessionId: string,
    itemId: string,
    reason: string,
  ): Promise<{ stored: boolean }> {
    return request(this.baseUrl, `/api/items/${itemId}/skip`, {
      method: "POST",
      body: JSON.stringify({ session_id: sessionId, reason }),
    });
  }

  submitReview(
    itemId: string,
    reviewerId: string,
    correct: boolean,
  ): Promise<{ stored: boolean }> {
    return request(this.baseUrl, `/api/items/${itemId}/review`, {
      method: "POST",
      body: JSON.stringify({ reviewer_id: reviewerId, correct }),
    });
  }
}
